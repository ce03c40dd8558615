"""File formats: comparison CSV, state JSON, samples JSONL, summary JSON.

Every output file embeds the config digest and seed it was produced from
(JSON files in a ``_meta`` object, CSV files in a leading comment line),
so results are traceable to their inputs.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable

import numpy as np

from .data import ComparisonDataset, PairLayout
from .errors import DataError
from .evaluation import PosteriorSummary
from .model import ModelState, SkillClustering, IntransitivityClustering
from .sampler import ChainSamples, SampleRecord, SamplerSchedule

__all__ = [
    "read_comparisons_csv",
    "write_comparisons_csv",
    "state_to_dict",
    "state_from_dict",
    "write_state_json",
    "read_state_json",
    "write_samples_jsonl",
    "read_samples_jsonl",
    "write_summary_json",
    "read_summary_json",
    "write_metrics_json",
]


def _meta(config_digest: str, seed: int) -> dict:
    return {"config_digest": config_digest, "seed": seed}


def read_comparisons_csv(path, objects: Iterable[str] | None = None) -> ComparisonDataset:
    """Read a ``winner,loser`` CSV; extra columns (date, season) are ignored.

    Lines starting with ``#`` are comments.  An empty body yields a
    prior-only dataset when ``objects`` is supplied.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [line for line in fh if not line.startswith("#")]
    except OSError as err:
        raise DataError(f"cannot read {path}: {err}") from err
    reader = csv.reader(rows)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError(f"{path} is empty") from None
    header = [h.strip().lower() for h in header]
    if header[:2] != ["winner", "loser"]:
        raise DataError(f"{path} must start with a 'winner,loser' header, got {header!r}")
    comparisons = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) < 2:
            raise DataError(f"{path}:{lineno}: expected at least two columns")
        comparisons.append((row[0].strip(), row[1].strip()))
    return ComparisonDataset.from_comparisons(comparisons, objects=objects)


def write_comparisons_csv(path, data: ComparisonDataset, config_digest: str = "", seed: int = 0) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(f"# config_digest={config_digest} seed={seed}\n")
        writer = csv.writer(fh)
        writer.writerow(["winner", "loser"])
        labels = data.objects.labels
        for w, l in zip(data.winners.tolist(), data.losers.tolist()):
            writer.writerow([labels[w], labels[l]])


def state_to_dict(state: ModelState, labels: Iterable[str]) -> dict:
    """Explicit serialisation: levels, counts, per-object and per-pair labels."""
    labels = list(labels)
    layout = state.intrans.layout
    if len(labels) != state.n:
        raise ValueError("label count disagrees with the state")
    return {
        "n": state.n,
        "objects": labels,
        "a_minus": state.skills.a_minus,
        "a_plus": state.skills.a_plus,
        "phi": [float(v) for v in state.skills.phi],
        "K": state.intrans.k,
        "theta": [float(v) for v in state.intrans.theta],
        "object_labels": {
            labels[i]: state.skills.label_of(i) for i in range(state.n)
        },
        "pair_labels": {
            f"{labels[i]}|{labels[j]}": int(state.intrans.allocation[s])
            for s, (i, j) in enumerate(layout.free_pairs)
        },
        "fixed_pairs": [[labels[i], labels[j]] for i, j in layout.fixed_pairs],
    }


def state_from_dict(doc: dict) -> tuple[ModelState, list[str]]:
    labels = [str(x) for x in doc["objects"]]
    n = int(doc["n"])
    if len(labels) != n:
        raise DataError("object list disagrees with n")
    pos = {x: k for k, x in enumerate(labels)}
    fixed = [(pos[a], pos[b]) for a, b in doc["fixed_pairs"]]
    fixed = [(max(i, j), min(i, j)) for i, j in fixed]
    layout = PairLayout.build(n, fixed)
    phi = np.asarray(doc["phi"], dtype=np.float64)
    zero_index = int(doc["a_minus"])
    allocation = np.zeros(n, dtype=np.int32)
    for label, lab in doc["object_labels"].items():
        allocation[pos[str(label)]] = int(lab) + zero_index
    theta = np.asarray(doc["theta"], dtype=np.float64)
    z = np.zeros(layout.n_free, dtype=np.int32)
    for key, lab in doc["pair_labels"].items():
        a, b = key.split("|")
        i, j = pos[a], pos[b]
        slot = layout.slot(i, j)
        if slot < 0:
            raise DataError(f"pair {key} is pinned but carries a label")
        z[slot] = int(lab) if i > j else -int(lab)
    skills = SkillClustering(phi=phi, zero_index=zero_index, allocation=allocation)
    intrans = IntransitivityClustering(theta=theta, allocation=z, layout=layout)
    return ModelState(skills=skills, intrans=intrans), labels


def write_state_json(path, state: ModelState, labels, config_digest: str = "", seed: int = 0) -> None:
    doc = state_to_dict(state, labels)
    doc["_meta"] = _meta(config_digest, seed)
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def read_state_json(path) -> tuple[ModelState, list[str]]:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise DataError(f"cannot parse state file {path}: {err}") from err
    return state_from_dict(doc)


def write_samples_jsonl(path, samples: ChainSamples, config_digest: str = "", seed: int = 0) -> None:
    """One recorded state per line, preceded by a meta line."""
    path = Path(path)
    with path.open("w") as fh:
        head = {
            "_meta": _meta(config_digest, seed),
            "n": samples.layout.n,
            "fixed_pairs": list(map(list, samples.layout.fixed_pairs)),
            "acceptance": samples.acceptance,
        }
        fh.write(json.dumps(head, sort_keys=True) + "\n")
        for rec in samples.records:
            fh.write(
                json.dumps(
                    {
                        "iteration": rec.iteration,
                        "log_post": rec.log_post,
                        "K": rec.k,
                        "A": rec.a,
                        "a_minus": rec.zero_index,
                        "theta": list(rec.theta),
                        "phi": list(rec.phi),
                        "z": rec.z.tolist(),
                        "y": rec.y.tolist(),
                    }
                )
                + "\n"
            )


def read_samples_jsonl(path) -> ChainSamples:
    path = Path(path)
    records: list[SampleRecord] = []
    try:
        with path.open() as fh:
            head = json.loads(next(fh))
            layout = PairLayout.build(
                int(head["n"]), [(int(i), int(j)) for i, j in head["fixed_pairs"]]
            )
            for line in fh:
                if not line.strip():
                    continue
                doc = json.loads(line)
                records.append(
                    SampleRecord(
                        iteration=int(doc["iteration"]),
                        log_post=float(doc["log_post"]),
                        k=int(doc["K"]),
                        a=int(doc["A"]),
                        zero_index=int(doc["a_minus"]),
                        theta=tuple(doc["theta"]),
                        phi=tuple(doc["phi"]),
                        z=np.asarray(doc["z"], dtype=np.int16),
                        y=np.asarray(doc["y"], dtype=np.int16),
                    )
                )
    except (OSError, json.JSONDecodeError, KeyError, StopIteration) as err:
        raise DataError(f"cannot parse samples file {path}: {err}") from err
    return ChainSamples(
        layout=layout,
        records=records,
        trace=np.array([r.log_post for r in records]),
        acceptance=head.get("acceptance", {}),
        seed=int(head.get("_meta", {}).get("seed", 0)),
        schedule=SamplerSchedule(iterations=0, burn_in=0, thin=1),
        final_state=records[-1].to_state(layout) if records else None,
    )


def _array(x) -> list:
    return np.asarray(x).tolist()


def write_summary_json(
    path, summary: PosteriorSummary, config_digest: str = "", seed: int = 0, acceptance=None
) -> None:
    doc = {
        "_meta": _meta(config_digest, seed),
        "objects": list(summary.labels),
        "n_samples": summary.n_samples,
        "r_mean": _array(summary.r_mean),
        "r_ci": _array(summary.r_ci),
        "theta_mean": _array(summary.theta_mean),
        "theta_star": _array(summary.theta_star),
        "p_matrix": _array(summary.p_matrix),
        "p_dot": _array(summary.p_dot),
        "p_dot_ci": _array(summary.p_dot_ci),
        "ability": _array(summary.ability),
        "ability_ci": _array(summary.ability_ci),
        "k_histogram": {str(k): v for k, v in summary.k_histogram.items()},
        "a_histogram": {str(a): v for a, v in summary.a_histogram.items()},
        "ranking_by_probability": summary.ranking_by_probability,
        "ranking_by_ability": summary.ranking_by_ability,
        "bt_skills": _array(summary.bt_skills),
        "acceptance": acceptance or {},
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def read_summary_json(path) -> PosteriorSummary:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise DataError(f"cannot parse summary file {path}: {err}") from err
    try:
        return PosteriorSummary(
            labels=tuple(doc["objects"]),
            r_mean=np.asarray(doc["r_mean"]),
            r_ci=np.asarray(doc["r_ci"]),
            theta_mean=np.asarray(doc["theta_mean"]),
            theta_star=np.asarray(doc["theta_star"]),
            p_matrix=np.asarray(doc["p_matrix"]),
            p_dot=np.asarray(doc["p_dot"]),
            p_dot_ci=np.asarray(doc["p_dot_ci"]),
            ability=np.asarray(doc["ability"]),
            ability_ci=np.asarray(doc["ability_ci"]),
            k_histogram={int(k): v for k, v in doc["k_histogram"].items()},
            a_histogram={int(a): v for a, v in doc["a_histogram"].items()},
            ranking_by_probability=list(doc["ranking_by_probability"]),
            ranking_by_ability=list(doc["ranking_by_ability"]),
            bt_skills=np.asarray(doc["bt_skills"]),
            n_samples=int(doc.get("n_samples", 0)),
            extras={"acceptance": doc.get("acceptance", {})},
        )
    except KeyError as err:
        raise DataError(f"summary file {path} is missing field {err}") from err


def write_metrics_json(path, metrics: dict, config_digest: str = "", seed: int = 0) -> None:
    doc = dict(metrics)
    doc["_meta"] = _meta(config_digest, seed)
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
