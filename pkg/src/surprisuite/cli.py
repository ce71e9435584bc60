"""Operator surface: expand templates, train models, score suites, analyze.

Backends are named with a spec string:

* ``ngram:<model-file>``    built-in Kneser-Ney model
* ``mock:<rules-file>``     programmable oracle (rules + suite)
* ``exec:<command>``        spawn a subprocess speaking the wire protocol
* ``tcp:<host:port>``       connect to a running protocol endpoint

``SURPRISUITE_BACKEND`` supplies the default spec.  Exit codes: 0 ok,
2 validation failure, 3 transport failure, 4 protocol violation; failures
also emit one machine-readable JSON line on stderr.
"""
from __future__ import annotations

import datetime
import hashlib
import json
import sys
from pathlib import Path

import click

from . import __version__
from .errors import SurprisuiteError, ValidationError, exit_code_for
from .metrics import (Contrast, contrast_from_spec, eval_contrast,
                      suite_contrasts)
from .ngram import NGramBackend, NGramModel, train_file
from .oracle import mock_backend_from_rules
from .scoring import Backend, BackendInfo, align, handshake, merge_region_scores
from .scoring import score as score_sentences_op
from .stats import MIXED_EFFECTS_NOTE, ReportRow, summarize
from .suite import (ConditionLabel, TestSuite, load_suite, render_condition,
                    save_suite, suite_from_dict, suite_to_dict)
from .templates import ExpansionPlan, load_template
from .templates import expand as expand_template
from .wire import ExecBackend, TcpBackend, serve_stdio, serve_tcp

SCORES_FORMAT = "scores@1"
MANIFEST_FORMAT = "manifest@1"
ENV_BACKEND = "SURPRISUITE_BACKEND"


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _fail(exc: BaseException) -> "click.exceptions.Exit":
    payload = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    click.echo(json.dumps(payload), err=True)
    return click.exceptions.Exit(exit_code_for(exc))


def make_backend(spec: str) -> Backend:
    if ":" not in spec:
        raise ValidationError(
            f"backend spec {spec!r} must look like kind:argument")
    kind, arg = spec.split(":", 1)
    if kind == "ngram":
        return NGramBackend(NGramModel.load(arg))
    if kind == "mock":
        return mock_backend_from_rules(arg)
    if kind == "exec":
        return ExecBackend(arg)
    if kind == "tcp":
        host, _, port = arg.rpartition(":")
        if not host or not port.isdigit():
            raise ValidationError(f"tcp spec needs host:port, got {arg!r}")
        return TcpBackend(host, int(port))
    raise ValidationError(f"unknown backend kind {kind!r}")


@click.group()
@click.version_option(version=__version__)
def main():
    """Region-based surprisal evaluation for incremental language models."""


# ---------------------------------------------------------------------------
# expand

@main.command("expand")
@click.option("--template", "template_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["exhaustive", "sample"]),
              default="exhaustive", show_default=True)
@click.option("--sample-size", type=int, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def cmd_expand(template_path, mode, sample_size, seed, out_path):
    """Expand a seeded template into a generated suite file."""
    try:
        template = load_template(template_path)
        plan = ExpansionPlan(mode=mode, sample_size=sample_size, rng_seed=seed)
        suite = expand_template(template, plan)
        save_suite(suite, out_path)
    except SurprisuiteError as e:
        raise _fail(e)
    click.echo(f"wrote {out_path}: {len(suite.items)} items x "
               f"{len(suite.condition_labels())} conditions")


# ---------------------------------------------------------------------------
# ngram-train

@main.command("ngram-train")
@click.option("--corpus", "corpus_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--order", type=int, default=5, show_default=True)
@click.option("--unk-threshold", type=int, default=2, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def cmd_ngram_train(corpus_path, order, unk_threshold, out_path):
    """Train a Kneser-Ney n-gram model on a one-sentence-per-line corpus."""
    try:
        model = train_file(corpus_path, order=order, unk_threshold=unk_threshold)
        model.save(out_path)
    except SurprisuiteError as e:
        raise _fail(e)
    click.echo(f"wrote {out_path}: order {model.order}, "
               f"{len(model.prediction_vocab())} prediction types")


# ---------------------------------------------------------------------------
# score

def _score_suite(suite: TestSuite, backend: Backend, jobs: int,
                 batch_size: int) -> tuple[BackendInfo, list[dict]]:
    info = handshake(backend)

    # Deterministic flat order: items in file order, conditions in cross
    # order, physical sentences in index order.
    units = []  # (item, label, [RegionedSentence, ...])
    sentences: list[str] = []
    for item in suite.items:
        for label in suite.condition_labels():
            rsents = render_condition(suite, item, label)
            units.append((item, label, rsents))
            sentences.extend(r.text for r in rsents)

    batches = [sentences[i:i + batch_size]
               for i in range(0, len(sentences), batch_size)]
    results = [None] * len(batches)
    if jobs > 1 and hasattr(backend, "submit"):
        # Pipeline requests over the wire; replies may arrive out of order.
        in_flight: list[tuple[int, int]] = []
        next_batch = 0
        while next_batch < len(batches) or in_flight:
            while next_batch < len(batches) and len(in_flight) < jobs:
                req_id = backend.submit(batches[next_batch])  # type: ignore[attr-defined]
                in_flight.append((req_id, next_batch))
                next_batch += 1
            req_id, b = in_flight.pop(0)
            results[b] = backend.collect(req_id, batches[b])  # type: ignore[attr-defined]
    else:
        for b, batch in enumerate(batches):
            results[b] = backend.score_sentences(batch)
    scored = [s for chunk in results for s in chunk]

    # Validate through the harness-side op (coverage, additivity, order).
    flat = score_sentences_op(_Precomputed(scored, info), sentences)

    rows = []
    cursor = 0
    for item, label, rsents in units:
        sentence_payloads = []
        region_parts = []
        for rsent in rsents:
            sc = flat[cursor]
            cursor += 1
            region_parts.append(align(sc, rsent))
            sentence_payloads.append({
                "text": sc.sentence,
                "total_bits": sc.total_bits,
                "tokens": [{"text": t.text, "surprisal_bits": t.surprisal_bits,
                            "start": t.start, "end": t.end} for t in sc.tokens],
            })
        merged = merge_region_scores(region_parts)
        rows.append({
            "item": item.id,
            "condition": label.as_dict(),
            "sentences": sentence_payloads,
            "regions": [{"region": r, "surprisal_bits": merged.sums[r],
                         "tokens": merged.counts[r]}
                        for r in suite.region_names],
        })
    return info, rows


class _Precomputed(Backend):
    """Wrap already-fetched scores so the validating score() op can run."""

    def __init__(self, scores, info):
        self._scores = scores
        self._info = info

    def info(self):
        return self._info

    def score_sentences(self, sentences):
        return self._scores


@main.command("score")
@click.option("--suite", "suite_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--backend", "backend_spec", envvar=ENV_BACKEND, required=True,
              help=f"backend spec; defaults to ${ENV_BACKEND}")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--jobs", type=int, default=1, show_default=True,
              help="score requests kept in flight (wire backends)")
@click.option("--batch-size", type=int, default=32, show_default=True)
def cmd_score(suite_path, backend_spec, out_path, jobs, batch_size):
    """Score every sentence of a suite and persist token/region surprisals."""
    try:
        suite = load_suite(suite_path)
        with make_backend(backend_spec) as backend:
            info, rows = _score_suite(suite, backend, jobs, batch_size)
        doc = {
            "format": SCORES_FORMAT,
            "suite_sha256": _sha256(suite_path),
            "backend": {"name": info.name, "kind": info.kind,
                        "version": info.version,
                        "context_window": info.context_window},
            "suite": suite_to_dict(suite),
            "items": rows,
        }
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, ensure_ascii=False, indent=1)
            fh.write("\n")
    except SurprisuiteError as e:
        raise _fail(e)
    click.echo(f"wrote {out_path}: {len(rows)} scored conditions")


def load_scores(path) -> tuple[TestSuite, dict, dict]:
    """Returns (suite, backend info dict, region sums by item/condition)."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != SCORES_FORMAT:
        raise ValidationError(f"{path}: not a {SCORES_FORMAT} file")
    suite = suite_from_dict(doc["suite"])
    sums: dict[int, dict[ConditionLabel, dict[str, float]]] = {}
    for row in doc["items"]:
        label = suite.label(row["condition"])
        sums.setdefault(row["item"], {})[label] = {
            r["region"]: r["surprisal_bits"] for r in row["regions"]}
    return suite, doc["backend"], sums


# ---------------------------------------------------------------------------
# analyze

def _load_contrast_specs(suite: TestSuite, contrasts_path) -> list[Contrast]:
    if contrasts_path is None:
        contrasts = suite_contrasts(suite)
        if not contrasts:
            raise ValidationError(
                "suite embeds no analyses; pass --contrasts FILE")
        return contrasts
    with open(contrasts_path, encoding="utf-8") as fh:
        doc = json.load(fh)
    specs = doc["contrasts"] if isinstance(doc, dict) else doc
    return [contrast_from_spec(suite, s) for s in specs]


@main.command("analyze")
@click.option("--scores", "scores_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--contrasts", "contrasts_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="contrast definitions; defaults to the suite's analyses")
@click.option("--ci-level", type=float, default=0.95, show_default=True)
@click.option("--n-perm", type=int, default=10000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "report_path", required=True,
              type=click.Path(dir_okay=False))
@click.option("--manifest", "manifest_path", default=None,
              type=click.Path(dir_okay=False),
              help="defaults to <out>.manifest.json")
def cmd_analyze(scores_path, contrasts_path, ci_level, n_perm, seed,
                report_path, manifest_path):
    """Evaluate contrasts over a scores file; write report table + manifest."""
    try:
        report_bytes = _analyze(scores_path, contrasts_path, ci_level, n_perm,
                                seed, report_path, manifest_path)
    except SurprisuiteError as e:
        raise _fail(e)
    click.echo(f"wrote {report_path} ({report_bytes} bytes)")


def _analyze(scores_path, contrasts_path, ci_level, n_perm, seed,
             report_path, manifest_path) -> int:
    suite, backend_info, sums = load_scores(scores_path)
    contrasts = _load_contrast_specs(suite, contrasts_path)

    lines = [f"# {MIXED_EFFECTS_NOTE}", "\t".join(ReportRow.HEADER)]
    for contrast in contrasts:
        metric = eval_contrast(suite, sums, contrast)
        row = summarize(metric, ci_level=ci_level, n_perm=n_perm, rng_seed=seed,
                        condition_set=contrast.condition_set(),
                        backend=backend_info["name"], suite=suite.name)
        lines.append(row.as_tsv())
    report = "\n".join(lines) + "\n"
    Path(report_path).write_text(report, encoding="utf-8")

    manifest = {
        "format": MANIFEST_FORMAT,
        "tool_version": __version__,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "scores": {"path": str(scores_path), "sha256": _sha256(scores_path)},
        "suite": {"name": suite.name},
        "backend": backend_info,
        "contrasts": {
            "path": str(contrasts_path) if contrasts_path else None,
            "names": [c.name for c in contrasts],
        },
        "ci_level": ci_level,
        "n_perm": n_perm,
        "rng_seed": seed,
        "report": {"path": str(report_path), "sha256": _sha256(report_path)},
        "note": MIXED_EFFECTS_NOTE,
    }
    mpath = manifest_path or f"{report_path}.manifest.json"
    Path(mpath).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return len(report.encode("utf-8"))


@main.command("rerun")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "report_path", required=True,
              type=click.Path(dir_okay=False))
def cmd_rerun(manifest_path, report_path):
    """Recompute a report from its manifest; verifies the recorded hash."""
    try:
        with open(manifest_path, encoding="utf-8") as fh:
            manifest = json.load(fh)
        if manifest.get("format") != MANIFEST_FORMAT:
            raise ValidationError(f"{manifest_path}: not a {MANIFEST_FORMAT} file")
        scores = manifest["scores"]
        if _sha256(scores["path"]) != scores["sha256"]:
            raise ValidationError("scores file changed since the manifest was written")
        _analyze(scores["path"], manifest["contrasts"]["path"],
                 manifest["ci_level"], manifest["n_perm"], manifest["rng_seed"],
                 report_path, f"{report_path}.manifest.json")
        got = _sha256(report_path)
        want = manifest["report"]["sha256"]
        if got != want:
            raise ValidationError(
                f"rerun produced report {got[:12]}.., manifest recorded {want[:12]}..")
    except SurprisuiteError as e:
        raise _fail(e)
    click.echo(f"report hash verified: {report_path}")


# ---------------------------------------------------------------------------
# report

@main.command("report")
@click.argument("report_paths", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False))
def cmd_report(report_paths, out_path):
    """Merge analysis reports into one long-format table for plotting."""
    try:
        header = "\t".join(ReportRow.HEADER)
        rows = []
        for p in report_paths:
            for line in Path(p).read_text(encoding="utf-8").splitlines():
                if not line or line.startswith("#"):
                    continue
                if line == header:
                    continue
                if line.split("\t")[0] == "metric":
                    raise ValidationError(f"{p}: unrecognized report header")
                rows.append(line)
        merged = "\n".join([f"# {MIXED_EFFECTS_NOTE}", header] + rows) + "\n"
    except SurprisuiteError as e:
        raise _fail(e)
    if out_path:
        Path(out_path).write_text(merged, encoding="utf-8")
        click.echo(f"wrote {out_path}: {len(rows)} rows")
    else:
        click.echo(merged, nl=False)


# ---------------------------------------------------------------------------
# serve

@main.command("serve")
@click.argument("backend_spec")
@click.option("--transport", type=click.Choice(["stdio", "tcp"]),
              default="stdio", show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=0,
              help="TCP port (0 picks a free port, announced on stderr)")
def cmd_serve(backend_spec, transport, host, port):
    """Expose a built-in backend on the wire protocol."""
    try:
        backend = make_backend(backend_spec)
        if transport == "stdio":
            serve_stdio(backend)
        else:
            serve_tcp(backend, host, port, ready_file=sys.stderr)
    except SurprisuiteError as e:
        raise _fail(e)


if __name__ == "__main__":
    main()
