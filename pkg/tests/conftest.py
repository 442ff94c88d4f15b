def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of a run."""
    rows = []
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            when = getattr(rep, "when", "call")
            if "test_acceptance" in nodeid and when == "call":
                rows.append((nodeid.split("::")[-1], status == "passed"))
    for rep in terminalreporter.stats.get("skipped", []):
        nodeid = getattr(rep, "nodeid", "")
        if "test_acceptance" in nodeid:
            rows.append((nodeid.split("::")[-1], None))
    if not rows:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for name, ok in sorted(rows):
        mark = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        terminalreporter.write_line(f"  {mark}  {name}")
