"""Clustered map of handshake styles, with nearest-centroid classification.

Built from labeled recordings: five elements per recording, z-scored,
projected to three principal components, grouped by minimum-variance
clustering, cut at k clusters.  Each cluster takes the majority label of its
members (ties go to the lexicographically smallest label) and a subtendency
index: clusters sharing a label are numbered 1, 2, ... by cluster number.

Maps serialize to a line-oriented text format (.hsmap) that round-trips
exactly, including the training assignment of every sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import InvalidInputError
from ..recording import SessionRecording
from .features import FEATURE_NAMES, HandshakeFeatures, extract_features
from .pca import PcaModel, Standardization, pca_fit, standardize
from .ward import cut, ward_linkage

MAP_FORMAT_VERSION = 1
DEFAULT_CLUSTERS = 8


class MapBuildError(ValueError):
    """Training set cannot produce a usable map."""


class MapFormatError(ValueError):
    """Serialized map text is not valid."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class ClusterInfo:
    number: int                   # 0-based, stable across serialization
    label: str
    subtendency: int              # 1-based among clusters sharing the label
    centroid: tuple[float, ...]   # in component space
    size: int
    purity: float                 # majority count / size
    majority_tied: bool
    members: tuple[int, ...]      # training sample indices


@dataclass(frozen=True)
class EmotionMap:
    feature_names: tuple[str, ...]
    standardization: Standardization
    pca: PcaModel
    clusters: tuple[ClusterInfo, ...]   # ordered by cluster number

    @property
    def k(self) -> int:
        return len(self.clusters)

    @property
    def n_samples(self) -> int:
        return sum(c.size for c in self.clusters)

    @property
    def overall_purity(self) -> float:
        n = self.n_samples
        return sum(round(c.purity * c.size) for c in self.clusters) / n


@dataclass(frozen=True)
class Classification:
    label: str
    subtendency: int
    cluster: int
    distance: float     # to the winning centroid, component space


def build_emotion_map_from_features(features, labels: list[str], k: int = DEFAULT_CLUSTERS,
                                    feature_names: tuple[str, ...] = FEATURE_NAMES,
                                    ) -> EmotionMap:
    X = np.asarray(features, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(feature_names):
        raise InvalidInputError(f"features must be n x {len(feature_names)}")
    n = X.shape[0]
    if len(labels) != n:
        raise InvalidInputError("labels must match feature rows")
    if n < k:
        raise MapBuildError(f"need at least {k} samples for {k} clusters, got {n}")

    Z, stdn = standardize(X)
    model = pca_fit(Z, n_components=min(3, stdn.n_retained))
    scores = model.project(Z)
    assignments = cut(ward_linkage(scores), k)

    clusters = []
    label_counts: dict[str, int] = {}
    for number in range(k):
        members = tuple(i for i in range(n) if assignments[i] == number)
        counts: dict[str, int] = {}
        for i in members:
            counts[labels[i]] = counts.get(labels[i], 0) + 1
        top = max(counts.values())
        winners = sorted(name for name, c in counts.items() if c == top)
        label = winners[0]
        label_counts[label] = label_counts.get(label, 0) + 1
        centroid = scores[list(members)].mean(axis=0)
        clusters.append(ClusterInfo(
            number=number,
            label=label,
            subtendency=label_counts[label],
            centroid=tuple(float(v) for v in centroid),
            size=len(members),
            purity=top / len(members),
            majority_tied=len(winners) > 1,
            members=members,
        ))

    missing = sorted(set(labels) - {c.label for c in clusters})
    if missing:
        raise MapBuildError(f"no cluster took majority label(s): {', '.join(missing)}")
    return EmotionMap(feature_names=tuple(feature_names), standardization=stdn,
                      pca=model, clusters=tuple(clusters))


def build_emotion_map(recordings: list[SessionRecording], k: int = DEFAULT_CLUSTERS) -> EmotionMap:
    features = []
    labels = []
    for rec in recordings:
        if rec.header.label is None:
            raise MapBuildError(f"recording for {rec.header.participant!r} has no label")
        features.append(extract_features(rec).as_vector())
        labels.append(rec.header.label)
    return build_emotion_map_from_features(np.array(features), labels, k=k)


def classify_vector(emap: EmotionMap, features) -> Classification:
    if isinstance(features, HandshakeFeatures):
        features = features.as_vector()
    x = np.asarray(features, dtype=float)
    score = emap.pca.project(emap.standardization.apply(x))
    centroids = np.array([c.centroid for c in emap.clusters])
    distances = np.linalg.norm(centroids - score, axis=1)
    winner = int(np.argmin(distances))   # ties resolve to the lowest number
    info = emap.clusters[winner]
    return Classification(label=info.label, subtendency=info.subtendency,
                          cluster=info.number, distance=float(distances[winner]))


def classify_recording(emap: EmotionMap, rec: SessionRecording) -> Classification:
    return classify_vector(emap, extract_features(rec))


# --- serialization ---------------------------------------------------------

def _f(v: float) -> str:
    return repr(float(v))


def serialize_map(emap: EmotionMap) -> str:
    lines = [f"hsmap v={MAP_FORMAT_VERSION} k={emap.k} n={emap.n_samples} "
             f"features={','.join(emap.feature_names)}"]
    s = emap.standardization
    for name, mean, std, kept in zip(emap.feature_names, s.mean, s.std, s.retained):
        lines.append(f"feature name={name} mean={_f(mean)} std={_f(std)} "
                     f"retained={1 if kept else 0}")
    for comp, ev in zip(emap.pca.components, emap.pca.explained_variance):
        lines.append(f"pca ev={_f(ev)} w={','.join(_f(v) for v in comp)}")
    for c in emap.clusters:
        lines.append(
            f"cluster id={c.number} label={c.label} sub={c.subtendency} size={c.size} "
            f"purity={_f(c.purity)} tied={1 if c.majority_tied else 0} "
            f"centroid={','.join(_f(v) for v in c.centroid)} "
            f"members={','.join(str(m) for m in c.members)}")
    return "\n".join(lines) + "\n"


def _fields(body: str, lineno: int) -> dict[str, str]:
    out = {}
    for token in body.split():
        if "=" not in token:
            raise MapFormatError(f"bad token {token!r}", lineno)
        key, _, value = token.partition("=")
        if key in out:
            raise MapFormatError(f"duplicate key {key!r}", lineno)
        out[key] = value
    return out


def _float(fields: dict[str, str], key: str, lineno: int) -> float:
    try:
        return float(fields[key])
    except KeyError:
        raise MapFormatError(f"missing key {key!r}", lineno) from None
    except ValueError:
        raise MapFormatError(f"bad float for {key!r}", lineno) from None


def _int(fields: dict[str, str], key: str, lineno: int) -> int:
    try:
        return int(fields[key])
    except KeyError:
        raise MapFormatError(f"missing key {key!r}", lineno) from None
    except ValueError:
        raise MapFormatError(f"bad integer for {key!r}", lineno) from None


def parse_map(text: str) -> EmotionMap:
    lines = text.splitlines()
    if not lines:
        raise MapFormatError("empty map")
    head = _fields(lines[0].removeprefix("hsmap "), 1)
    if not lines[0].startswith("hsmap ") or _int(head, "v", 1) != MAP_FORMAT_VERSION:
        raise MapFormatError("not a version-1 map header", 1)
    k = _int(head, "k", 1)
    n = _int(head, "n", 1)
    if "features" not in head:
        raise MapFormatError("missing key 'features'", 1)
    names = tuple(head["features"].split(","))

    means, stds, retained = [], [], []
    components, evs = [], []
    clusters = []
    for lineno, raw in enumerate(lines[1:], start=2):
        kind, _, body = raw.partition(" ")
        fields = _fields(body, lineno)
        if kind == "feature":
            if len(means) >= len(names) or fields.get("name") != names[len(means)]:
                raise MapFormatError("feature lines out of order", lineno)
            means.append(_float(fields, "mean", lineno))
            stds.append(_float(fields, "std", lineno))
            retained.append(_int(fields, "retained", lineno) == 1)
        elif kind == "pca":
            evs.append(_float(fields, "ev", lineno))
            try:
                components.append(tuple(float(v) for v in fields["w"].split(",")))
            except (KeyError, ValueError):
                raise MapFormatError("bad component weights", lineno) from None
        elif kind == "cluster":
            try:
                centroid = tuple(float(v) for v in fields["centroid"].split(","))
                members = tuple(int(v) for v in fields["members"].split(","))
            except (KeyError, ValueError):
                raise MapFormatError("bad centroid or members", lineno) from None
            if "label" not in fields:
                raise MapFormatError("missing key 'label'", lineno)
            clusters.append(ClusterInfo(
                number=_int(fields, "id", lineno),
                label=fields["label"],
                subtendency=_int(fields, "sub", lineno),
                centroid=centroid,
                size=_int(fields, "size", lineno),
                purity=_float(fields, "purity", lineno),
                majority_tied=_int(fields, "tied", lineno) == 1,
                members=members,
            ))
        else:
            raise MapFormatError(f"unknown line kind {kind!r}", lineno)

    if len(means) != len(names):
        raise MapFormatError(f"expected {len(names)} feature lines, found {len(means)}")
    if not components:
        raise MapFormatError("no pca lines")
    if len(clusters) != k:
        raise MapFormatError(f"expected {k} cluster lines, found {len(clusters)}")
    if [c.number for c in clusters] != list(range(k)):
        raise MapFormatError("cluster ids must be 0..k-1 in order")
    if sum(c.size for c in clusters) != n:
        raise MapFormatError("cluster sizes do not sum to n")
    for c in clusters:
        if len(c.members) != c.size:
            raise MapFormatError(f"cluster {c.number} member count != size")
        if len(c.centroid) != len(components):
            raise MapFormatError(f"cluster {c.number} centroid length != components")
    return EmotionMap(
        feature_names=names,
        standardization=Standardization(tuple(means), tuple(stds), tuple(retained)),
        pca=PcaModel(components=tuple(components), explained_variance=tuple(evs)),
        clusters=tuple(clusters),
    )


def save_map(emap: EmotionMap, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_map(emap))


def load_map(path) -> EmotionMap:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_map(fh.read())
