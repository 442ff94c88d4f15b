"""Glasser-parcellation registry for the eight language ROIs.

Maps per-voxel parcel labels to ROI groups per hemisphere.  Parcel
names are matched case-insensitively with punctuation normalized, since
atlas exports disagree on separators ("a9-46v" vs "a9_46v").
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass

log = logging.getLogger(__name__)


class AtlasError(ValueError):
    pass


class DuplicateVoxel(AtlasError):
    pass


class IndexGap(AtlasError):
    pass


class UnknownRoi(AtlasError):
    pass


class UnknownParcel(AtlasError):
    pass


ROI_PARCELS: dict[str, tuple[str, ...]] = {
    "AG": ("PFm", "PGs", "PGi", "TPOJ2", "TPOJ3"),
    "ATL": ("STSda", "STSva", "STGa", "TE1a", "TE2a", "TGv", "TGd"),
    "PTL": ("A5", "STSdp", "STSvp", "PSL", "STV", "TPOJ1"),
    "IFG": ("44", "45", "IFJa", "IFSp"),
    "MFG": ("55b",),
    "IFGOrb": ("a47r", "p47r", "a9-46v"),
    "PCC": ("31pv", "31pd", "PCV", "7m", "23", "RSC"),
    "dmPFC": ("9m", "10d", "d32"),
}

ROI_NAMES = tuple(ROI_PARCELS)
HEMISPHERES = ("L", "R")


def normalize_parcel(name: str) -> str:
    return re.sub(r"[-_\s]", "", name).casefold()


def normalize_hemisphere(value: str) -> str:
    v = value.strip().casefold()
    if v in ("l", "lh", "left"):
        return "L"
    if v in ("r", "rh", "right"):
        return "R"
    raise AtlasError(f"unknown hemisphere {value!r}")


_PARCEL_TO_ROI = {
    normalize_parcel(p): roi for roi, parcels in ROI_PARCELS.items() for p in parcels
}


def roi_of_parcel(parcel: str) -> str | None:
    return _PARCEL_TO_ROI.get(normalize_parcel(parcel))


@dataclass
class ParcelLabels:
    """Per-voxel (hemisphere, parcel) labels for one subject."""

    hemispheres: tuple[str, ...]
    parcels: tuple[str, ...]

    def __post_init__(self):
        if len(self.hemispheres) != len(self.parcels):
            raise AtlasError("hemisphere/parcel count mismatch")

    def __len__(self) -> int:
        return len(self.parcels)


def load_parcel_labels(text: str) -> ParcelLabels:
    """Parse a "voxel_index<TAB>hemisphere<TAB>parcel" TSV.

    Voxel indices must be unique and gap-free from 0; parcels outside
    the eight language ROIs load fine but are flagged once.
    """
    rows: dict[int, tuple[str, str]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.rstrip("\n").split("\t")
        if cols[0] == "voxel_index":
            continue
        if len(cols) < 3:
            raise AtlasError(f"line {lineno}: expected 3 columns")
        idx = int(cols[0])
        if idx in rows:
            raise DuplicateVoxel(f"voxel {idx} listed twice")
        rows[idx] = (normalize_hemisphere(cols[1]), cols[2])
    if not rows:
        raise AtlasError("empty parcel file")
    n = max(rows) + 1
    missing = [i for i in range(n) if i not in rows]
    if missing:
        raise IndexGap(f"missing voxel indices, first gap at {missing[0]}")
    hemis, parcels = zip(*(rows[i] for i in range(n)))
    unknown = {p for p in parcels if roi_of_parcel(p) is None}
    if unknown:
        log.warning(
            "%d parcel names outside the language ROIs (e.g. %s)",
            len(unknown),
            sorted(unknown)[0],
        )
    return ParcelLabels(hemispheres=hemis, parcels=parcels)


def roi_members(roi: str, hemisphere: str, labels: ParcelLabels) -> set[int]:
    """Voxel indices whose parcel belongs to the ROI in that hemisphere."""
    if roi not in ROI_PARCELS:
        raise UnknownRoi(f"{roi!r} is not one of {ROI_NAMES}")
    hemi = normalize_hemisphere(hemisphere)
    wanted = {normalize_parcel(p) for p in ROI_PARCELS[roi]}
    return {
        i
        for i, (h, p) in enumerate(zip(labels.hemispheres, labels.parcels))
        if h == hemi and normalize_parcel(p) in wanted
    }


def roi_table_json() -> str:
    """The ROI -> parcels table, for documentation exports."""
    return json.dumps({roi: list(ps) for roi, ps in ROI_PARCELS.items()}, indent=2)
