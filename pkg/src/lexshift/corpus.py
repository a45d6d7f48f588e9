"""Corpus ingestion, Persian-aware normalization, tokenization, slicing, balancing."""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DataError

ZWNJ = "\u200c"

DEFAULT_BALANCE_TARGET = 628_290
DEFAULT_VIABILITY_THRESHOLD = 100_000

# Arabic letter variants folded to their Persian counterparts.
_CHAR_MAP = str.maketrans({
    "ي": "ی",  # ي -> ی
    "ى": "ی",  # ى -> ی
    "ك": "ک",  # ك -> ک
    "ٱ": "ا",  # ٱ -> ا
    "أ": "ا",  # أ -> ا
    "إ": "ا",  # إ -> ا
    "ة": "ه",  # ة -> ه
})

# Harakat, dagger alif, and tatweel are dropped outright.
_MARKS = re.compile("[\u064b-\u0652\u0670\u0640]")
# Invisible formatting characters other than ZWNJ (which can be lexical).
_INVISIBLE = re.compile("[\u200b\u200d\u200e\u200f\u2060\u00ad\ufeff]")
# Anything that is not a word character, whitespace, or ZWNJ becomes a space.
_NONWORD = re.compile(r"[^\w\s\u200c]")
_SPACES = re.compile(r"\s+")
# ZWNJ is kept only when it sits strictly inside a word.
_EDGE_ZWNJ = re.compile("(?:(?<=\\s)\u200c+)|(?:\u200c+(?=\\s))|(?:\\A\u200c+)|(?:\u200c+\\Z)")


def normalize_text(raw: str) -> str:
    """Normalize one line of Persian text. Total and idempotent."""
    text = unicodedata.normalize("NFC", raw)
    text = _MARKS.sub("", text)
    text = _INVISIBLE.sub("", text)
    text = text.translate(_CHAR_MAP)
    text = _NONWORD.sub(" ", text)
    text = _SPACES.sub(" ", text).strip()
    text = _EDGE_ZWNJ.sub("", text)
    return text


def tokenize(text: str) -> list[str]:
    """Whitespace tokenization of already-normalized text. No stemming, no folding."""
    return text.split()


@dataclass(frozen=True)
class RawDocument:
    doc_id: str
    poet_id: str
    century: int
    text: str


@dataclass
class CorpusSlice:
    slice_id: str
    kind: str  # "century" | "poet"
    verses: list[list[str]]
    verse_poets: list[str]
    token_count: int
    poem_count: int
    viability: str  # "full" | "sparse-caution"

    def __post_init__(self):
        assert self.kind in ("century", "poet")
        assert len(self.verses) == len(self.verse_poets)


@dataclass(frozen=True)
class BalancePlan:
    target_tokens: int
    seed: int
    selection: tuple[tuple[str, int], ...]  # (poet_id, verse_index) in pick order

    def to_json(self) -> dict:
        return {
            "target_tokens": self.target_tokens,
            "seed": self.seed,
            "selection": [[p, i] for p, i in self.selection],
        }


def century_slice_id(century: int) -> str:
    return f"c{century:02d}"


def validate_documents(docs: Sequence[RawDocument],
                       century_range: tuple[int, int] = (1, 99)) -> None:
    lo, hi = century_range
    for d in docs:
        if not d.poet_id:
            raise DataError(f"document {d.doc_id!r}: empty poet_id")
        if not d.text.strip():
            raise DataError(f"document {d.doc_id!r}: empty text")
        if not lo <= d.century <= hi:
            raise DataError(
                f"document {d.doc_id!r}: century {d.century} outside [{lo}, {hi}]")


def normalize_documents(docs: Iterable[RawDocument]) -> list[RawDocument]:
    out = []
    for d in docs:
        lines = [normalize_text(line) for line in d.text.splitlines()]
        text = "\n".join(line for line in lines if line)
        out.append(RawDocument(d.doc_id, d.poet_id, d.century, text))
    return out


def build_slices(docs: Sequence[RawDocument], kind: str,
                 viability_threshold: int = DEFAULT_VIABILITY_THRESHOLD) -> list[CorpusSlice]:
    """Group normalized documents into one slice per century or per poet.

    Documents must already be normalized; verses are the newline-split lines.
    """
    if not docs:
        raise DataError("no input")
    if kind not in ("century", "poet"):
        raise DataError(f"unknown slice kind {kind!r}")

    groups: dict[str, list[RawDocument]] = {}
    for d in docs:
        label = century_slice_id(d.century) if kind == "century" else d.poet_id
        groups.setdefault(label, []).append(d)

    slices = []
    for label in sorted(groups):
        verses: list[list[str]] = []
        poets: list[str] = []
        for d in groups[label]:
            for line in d.text.splitlines():
                toks = tokenize(line)
                if toks:
                    verses.append(toks)
                    poets.append(d.poet_id)
        token_count = sum(len(v) for v in verses)
        viability = "sparse-caution" if token_count < viability_threshold else "full"
        slices.append(CorpusSlice(
            slice_id=label, kind=kind, verses=verses, verse_poets=poets,
            token_count=token_count, poem_count=len(groups[label]),
            viability=viability))
    return slices


def balance_slice(slc: CorpusSlice,
                  target_tokens: int = DEFAULT_BALANCE_TARGET,
                  seed: int = 42,
                  viability_threshold: int = DEFAULT_VIABILITY_THRESHOLD,
                  ) -> tuple[CorpusSlice, BalancePlan]:
    """Downsample an oversized century slice by poet-aware round-robin selection.

    Slices at or below the target are kept in full. Selection walks poets in
    lexicographic order, each poet's verses in canonical corpus order, and stops
    at the first verse that reaches or exceeds the target. The seed is recorded
    for provenance; the procedure itself is order-based and deterministic.
    """
    if slc.token_count <= target_tokens:
        return slc, BalancePlan(target_tokens, seed, ())

    by_poet: dict[str, list[int]] = {}
    for idx, poet in enumerate(slc.verse_poets):
        by_poet.setdefault(poet, []).append(idx)
    poets = sorted(by_poet)
    cursors = {p: 0 for p in poets}

    selection: list[tuple[str, int]] = []
    tokens = 0
    while tokens < target_tokens:
        advanced = False
        for p in poets:
            if cursors[p] >= len(by_poet[p]):
                continue
            idx = by_poet[p][cursors[p]]
            cursors[p] += 1
            selection.append((p, idx))
            tokens += len(slc.verses[idx])
            advanced = True
            if tokens >= target_tokens:
                break
        if not advanced:  # all poets exhausted before target; take everything
            break

    keep = sorted(idx for _, idx in selection)
    verses = [slc.verses[i] for i in keep]
    poets_kept = [slc.verse_poets[i] for i in keep]
    token_count = sum(len(v) for v in verses)
    balanced = CorpusSlice(
        slice_id=slc.slice_id, kind=slc.kind, verses=verses, verse_poets=poets_kept,
        token_count=token_count, poem_count=slc.poem_count,
        viability="sparse-caution" if token_count < viability_threshold else "full")
    return balanced, BalancePlan(target_tokens, seed, tuple(selection))


# -- ingestion ---------------------------------------------------------------

def load_documents(path: str | Path,
                   metadata: str | Path | None = None,
                   century_range: tuple[int, int] = (1, 99)) -> list[RawDocument]:
    """Load raw documents from a JSONL file or a text directory with TSV metadata."""
    path = Path(path)
    if path.is_dir():
        if metadata is None:
            raise DataError(f"directory corpus {path} needs a metadata TSV")
        docs = _load_dir(path, Path(metadata))
    else:
        docs = _load_jsonl(path)
    if not docs:
        raise DataError("no input")
    validate_documents(docs, century_range)
    return docs


def _load_jsonl(path: Path) -> list[RawDocument]:
    if not path.exists():
        raise DataError(f"corpus file not found: {path}")
    docs = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                docs.append(RawDocument(
                    doc_id=str(rec["doc_id"]), poet_id=str(rec["poet_id"]),
                    century=int(rec["century"]), text=str(rec["text"])))
            except (KeyError, ValueError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: bad record ({exc})") from exc
    return docs


def _load_dir(root: Path, metadata: Path) -> list[RawDocument]:
    if not metadata.exists():
        raise DataError(f"metadata file not found: {metadata}")
    docs = []
    with metadata.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError(f"{metadata}:{lineno}: expected 3 tab-separated fields")
            doc_id, poet_id, century = parts
            text_path = root / f"{doc_id}.txt"
            if not text_path.exists():
                raise DataError(f"{metadata}:{lineno}: missing text file {text_path}")
            try:
                cent = int(century)
            except ValueError as exc:
                raise DataError(f"{metadata}:{lineno}: bad century {century!r}") from exc
            docs.append(RawDocument(doc_id, poet_id, cent, text_path.read_text("utf-8")))
    return docs


# -- slice persistence -------------------------------------------------------

def save_slice(slc: CorpusSlice, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    text = "\n".join(" ".join(v) for v in slc.verses)
    (directory / f"{slc.slice_id}.txt").write_text(text + ("\n" if text else ""), "utf-8")
    meta = {
        "slice_id": slc.slice_id,
        "kind": slc.kind,
        "token_count": slc.token_count,
        "poem_count": slc.poem_count,
        "viability": slc.viability,
        "verse_poets": slc.verse_poets,
    }
    (directory / f"{slc.slice_id}.meta.json").write_text(
        json.dumps(meta, ensure_ascii=False, sort_keys=True), "utf-8")


def load_slice(directory: str | Path, slice_id: str) -> CorpusSlice:
    directory = Path(directory)
    meta_path = directory / f"{slice_id}.meta.json"
    text_path = directory / f"{slice_id}.txt"
    if not meta_path.exists() or not text_path.exists():
        raise DataError(f"slice {slice_id!r} not found in {directory}")
    meta = json.loads(meta_path.read_text("utf-8"))
    verses = [line.split() for line in text_path.read_text("utf-8").splitlines() if line]
    return CorpusSlice(
        slice_id=meta["slice_id"], kind=meta["kind"], verses=verses,
        verse_poets=meta["verse_poets"], token_count=meta["token_count"],
        poem_count=meta["poem_count"], viability=meta["viability"])
