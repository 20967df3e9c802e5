"""``dfs`` command-line interface.

Exit codes: 0 success, 1 validation (or other) failure, 2 usage error,
3 integrity failure, 4 aggregation rejected (gate or no match).
With ``--json`` every command prints exactly one canonical JSON document on
stdout; diagnostics always go to stderr.
"""

from __future__ import annotations

import argparse
import contextlib
import os
import sys
import uuid
from dataclasses import replace
from datetime import datetime
from pathlib import Path, PurePosixPath
from typing import Any, Callable, Mapping, Sequence, TextIO

from dfskit.aggregation import AggregationConfig, aggregate
from dfskit.canonical import canonical_dumps, serialize_canonical
from dfskit.catalog import (
    INDEX_FILE,
    Repository,
    TfIdfIndex,
    index_build,
    load_profile,
    profile_update,
    recommend,
    save_profile,
    search,
)
from dfskit.diff import json_diff
from dfskit.errors import (
    AggregationError,
    DFSError,
    ImmutabilityError,
    IntegrityError,
    MetafileSyntaxError,
    SchemaError,
    UnknownFileError,
)
from dfskit.graph import build_field_graph
from dfskit.integrity import VersionBump, bump, checksum_path, cite, compute_meta_checksum
from dfskit.model import METAFILE_NAME, DatasetRef, Metafile, load_json, parse_metafile, utc_now
from dfskit.validation import generate_skeleton, validate

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_INTEGRITY = 3
EXIT_AGGREGATION = 4

DEFAULT_REPO = "./dfs-repo"


class CliFailure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# --------------------------------------------------------------------------
# argument types


def _ranged_float(name: str, low: float, high: float, low_open: bool, high_open: bool):
    def convert(text: str) -> float:
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {text!r}") from None
        below = value <= low if low_open else value < low
        above = value >= high if high_open else value > high
        if below or above or value != value:
            lo, hi = "(" if low_open else "[", ")" if high_open else "]"
            raise argparse.ArgumentTypeError(f"{name} must lie in {lo}{low:g}, {high:g}{hi}")
        return value

    return convert


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("k must be >= 1")
    return value


def _citation(text: str) -> DatasetRef:
    try:
        return DatasetRef.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _common_options(suppress: bool) -> argparse.ArgumentParser:
    default = argparse.SUPPRESS if suppress else None
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--repo", default=default, metavar="DIR",
                   help=f"repository root (env DFS_REPO, default {DEFAULT_REPO})")
    g.add_argument("--json", action="store_true", default=default,
                   help="print one canonical JSON document on stdout")
    g.add_argument("--epsilon", type=_ranged_float("epsilon", 0, 1, False, True), default=default,
                   help="graph-similarity rejection threshold, in [0, 1) (default 0.1)")
    g.add_argument("--sigma", type=_ranged_float("sigma", 0, 1, True, False), default=default,
                   help="field-overlap acceptance threshold, in (0, 1] (default 0.6)")
    g.add_argument("-k", type=_positive_int, default=default, metavar="N",
                   help="number of results (default 10)")
    g.add_argument("--lambda", dest="lam", type=_ranged_float("lambda", 0, 1, True, False),
                   default=default, help="profile update rate, in (0, 1] (default 0.3)")
    g.add_argument("--user", default=default, help="profile user id (default 'default')")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_options(suppress=True)
    parser = argparse.ArgumentParser(
        prog="dfs",
        description="Author, verify, version, aggregate and search dataset metafiles.",
        parents=[_common_options(suppress=False)],
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=help_text, description=help_text, parents=[common])

    p = add("init", "write a skeleton metafile describing every file under DIR")
    p.add_argument("dir", help="dataset directory")
    p.add_argument("--name", required=True, help="dataset name")
    p.add_argument("-o", "--output", help=f"output path (default DIR/{METAFILE_NAME})")
    p.add_argument("--force", action="store_true", help="overwrite an existing metafile")

    p = add("validate", "check structure and checksums of a metafile")
    p.add_argument("metafile")
    p.add_argument("--data-root", help="also verify data files under this directory")

    p = add("hash", "print the recomputed meta checksum")
    p.add_argument("metafile")
    p.add_argument("--data-root", help="first refresh every file checksum from this directory")
    p.add_argument("--write", action="store_true", help="store the recomputed checksums in the metafile")

    p = add("bump", "increment the dataset version (and changed files' versions)")
    p.add_argument("metafile")
    what = p.add_mutually_exclusive_group(required=True)
    what.add_argument("--meta", action="store_true", help="metadata-only change")
    what.add_argument("--file", nargs="+", action="extend", metavar="LOCAL_ID",
                      help="data files whose bytes changed (checksums are refreshed)")
    p.add_argument("--data-root", help="directory holding the data files (default: the metafile's directory)")
    p.add_argument("-o", "--output", help="write here instead of updating in place")

    p = add("cite", "print the citation identifier <id>@v<meta-version>")
    p.add_argument("metafile")

    p = add("diff", "list structural differences between two metafiles")
    p.add_argument("a")
    p.add_argument("b")

    p = add("aggregate", "merge two datasets' metadata into a new metafile")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("-o", "--output", required=True, help="path of the aggregated metafile")
    p.add_argument("--report", help="also write the aggregation report here")

    p = add("graph", "print the field graph as a sorted edge list")
    p.add_argument("metafile")

    p = add("put", "store a dataset version in the repository")
    p.add_argument("metafile")
    p.add_argument("--data-root", help="copy (and verify) data files from this directory")

    p = add("get", "export a stored dataset version")
    p.add_argument("ref", type=_citation, metavar="ID@vN")
    p.add_argument("-o", "--output", required=True, help="destination directory")

    p = add("index", "manage the search index")
    index_sub = p.add_subparsers(dest="index_command", metavar="ACTION", required=True)
    index_sub.add_parser("build", help="index the latest version of every dataset", parents=[common])

    p = add("search", "rank datasets against a keyword query")
    p.add_argument("query", nargs="+")

    p = add("interact", "record that the user worked with a dataset")
    p.add_argument("ref", type=_citation, metavar="ID@vN")

    p = add("recommend", "suggest datasets matching the user's interest profile")
    p.add_argument("--include-seen", action="store_true", help="also list datasets the user has seen")
    return parser


# --------------------------------------------------------------------------
# helpers


class _Output:
    def __init__(self, stdout: TextIO, stderr: TextIO, json_mode: bool):
        self.stdout, self.stderr, self.json_mode = stdout, stderr, json_mode

    def emit(self, document: Any, human: str) -> None:
        if self.json_mode:
            self.stdout.write(canonical_dumps(document) + "\n")
        elif human:
            self.stdout.write(human if human.endswith("\n") else human + "\n")

    def note(self, message: str) -> None:
        self.stderr.write(message + "\n")


def _read_metafile(path: str | Path) -> Metafile:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CliFailure(EXIT_INVALID, f"{path}: cannot read: {exc.strerror or exc}") from None
    try:
        return parse_metafile(data)
    except MetafileSyntaxError as exc:
        raise CliFailure(EXIT_INVALID, f"{path}: {exc}") from None
    except SchemaError as exc:
        raise CliFailure(EXIT_INVALID, f"{path}: {exc.path}: {exc.message}") from None


def _write_bytes(path: str | Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_bytes(data)
    tmp.replace(path)


def _refresh_checksums(m: Metafile, data_root: Path, local_ids: Sequence[str] | None) -> Metafile:
    wanted = None if local_ids is None else set(local_ids)
    files = []
    for entry in m.meta.files:
        if wanted is None or entry.local_id in wanted:
            target = data_root.joinpath(*PurePosixPath(entry.path).parts)
            if not target.is_file():
                raise CliFailure(EXIT_INVALID, f"missing data file {target}")
            entry = replace(entry, checksum=checksum_path(target))
        files.append(entry)
    return replace(m, meta=replace(m.meta, files=tuple(files)))


def _ranking_output(out: _Output, results, header: dict) -> None:
    doc = {**header, "results": [{"citation": str(r), "score": s} for r, s in results]}
    lines = [f"{i}\t{ref}\t{score:.4f}" for i, (ref, score) in enumerate(results, start=1)]
    out.emit(doc, "\n".join(lines) if lines else "no results")


def _load_index(repo: Repository) -> TfIdfIndex:
    path = repo.root / INDEX_FILE
    if not path.is_file():
        raise CliFailure(EXIT_INVALID, f"no index at {path}; run 'dfs index build' first")
    return TfIdfIndex.load(path)


# --------------------------------------------------------------------------
# commands


def _cmd_init(args, ctx) -> int:
    target = Path(args.output) if args.output else Path(args.dir) / METAFILE_NAME
    if target.exists() and not args.force:
        raise CliFailure(EXIT_INVALID, f"{target} already exists (use --force to overwrite)")
    m = generate_skeleton(args.dir, args.name, now=ctx.clock(), new_id=ctx.uuid_source)
    _write_bytes(target, serialize_canonical(m))
    ctx.out.emit(
        {"citation": cite(m), "path": str(target), "files": len(m.meta.files)},
        f"wrote {target} ({cite(m)}, {len(m.meta.files)} files)",
    )
    return EXIT_OK


def _cmd_validate(args, ctx) -> int:
    try:
        data = Path(args.metafile).read_bytes()
        m = parse_metafile(data)
    except OSError as exc:
        raise CliFailure(EXIT_INVALID, f"{args.metafile}: cannot read: {exc.strerror or exc}") from None
    except MetafileSyntaxError as exc:
        raise CliFailure(EXIT_INVALID, f"{args.metafile}: {exc}") from None
    except SchemaError as exc:
        findings = exc.findings
    else:
        findings = validate(m, args.data_root).findings
    errors = [f for f in findings if f.severity == "error"]
    for f in findings:
        if f.severity == "warning":
            ctx.out.note(str(f))
    lines = [str(f) for f in errors]
    lines.append("OK" if not errors else f"INVALID: {len(errors)} error(s) in {args.metafile}")
    ctx.out.emit({"ok": not errors, "findings": [f.to_json() for f in findings]}, "\n".join(lines))
    return EXIT_OK if not errors else EXIT_INVALID


def _cmd_hash(args, ctx) -> int:
    m = _read_metafile(args.metafile)
    stored = m.checksum
    if args.data_root:
        m = _refresh_checksums(m, Path(args.data_root), None)
    computed = compute_meta_checksum(m)
    if args.write:
        _write_bytes(args.metafile, serialize_canonical(replace(m, checksum=computed)))
    ctx.out.emit(
        {"checksum": computed, "stored": stored, "match": computed == stored, "written": bool(args.write)},
        computed,
    )
    return EXIT_OK


def _cmd_bump(args, ctx) -> int:
    m = _read_metafile(args.metafile)
    if args.meta:
        change = VersionBump.meta_only()
    else:
        unknown = [fid for fid in args.file if m.meta.file(fid) is None]
        if unknown:
            raise UnknownFileError(f"{args.metafile}: no file with $id {unknown[0]!r}")
        root = Path(args.data_root) if args.data_root else Path(args.metafile).resolve().parent
        m = _refresh_checksums(m, root, args.file)
        change = VersionBump.file_change(*args.file)
    bumped = bump(m, change, ctx.clock())
    _write_bytes(args.output or args.metafile, serialize_canonical(bumped))
    ctx.out.emit({"citation": cite(bumped), "previous": cite(m)}, cite(bumped))
    return EXIT_OK


def _cmd_cite(args, ctx) -> int:
    m = _read_metafile(args.metafile)
    ctx.out.emit({"citation": cite(m), "id": m.id, "meta-version": m.meta_version}, cite(m))
    return EXIT_OK


def _cmd_diff(args, ctx) -> int:
    docs = []
    for path in (args.a, args.b):
        try:
            docs.append(load_json(Path(path).read_bytes()))
        except OSError as exc:
            raise CliFailure(EXIT_INVALID, f"{path}: cannot read: {exc.strerror or exc}") from None
        except MetafileSyntaxError as exc:
            raise CliFailure(EXIT_INVALID, f"{path}: {exc}") from None
    changes = json_diff(docs[0], docs[1])
    lines = []
    for c in changes:
        if c.op == "added":
            lines.append(f"+ {c.path}: {canonical_dumps(c.new)}")
        elif c.op == "removed":
            lines.append(f"- {c.path}: {canonical_dumps(c.old)}")
        else:
            lines.append(f"~ {c.path}: {canonical_dumps(c.old)} -> {canonical_dumps(c.new)}")
    ctx.out.emit({"changes": [c.to_json() for c in changes]}, "\n".join(lines) or "no differences")
    return EXIT_OK


def _cmd_aggregate(args, ctx) -> int:
    alpha, beta = _read_metafile(args.a), _read_metafile(args.b)
    cfg = AggregationConfig(
        epsilon=0.1 if args.epsilon is None else args.epsilon,
        sigma=0.6 if args.sigma is None else args.sigma,
    )
    result, report = aggregate(alpha, beta, cfg, ctx.clock(), new_id=ctx.uuid_source)
    _write_bytes(args.output, serialize_canonical(result))
    if args.report:
        _write_bytes(args.report, serialize_canonical(report))
    ctx.out.emit(
        report,
        f"aggregated {cite(result)} -> {args.output}: similarity {report.similarity_score:.4f}, "
        f"{len(report.matched_pairs)} matched pair(s), {len(report.files_added)} file(s) added",
    )
    return EXIT_OK


def _cmd_graph(args, ctx) -> int:
    g = build_field_graph(_read_metafile(args.metafile))
    doc = {
        "nodes": sorted(n.node_id for n in g.nodes),
        "edges": sorted([e.u, e.v, e.link_type] for e in g.edges),
    }
    ctx.out.emit(doc, g.to_edge_list())
    return EXIT_OK


def _cmd_put(args, ctx) -> int:
    m = _read_metafile(args.metafile)
    ref = ctx.repo.put(m, args.data_root)
    ctx.out.emit({"citation": str(ref), "path": str(ctx.repo.slot(ref))}, f"stored {ref}")
    return EXIT_OK


def _cmd_get(args, ctx) -> int:
    m = ctx.repo.export(args.ref, args.output)
    ctx.out.emit({"citation": cite(m), "path": str(args.output)}, f"exported {cite(m)} to {args.output}")
    return EXIT_OK


def _cmd_index(args, ctx) -> int:
    ix = index_build(ctx.repo)
    ctx.repo.root.mkdir(parents=True, exist_ok=True)
    path = ctx.repo.root / INDEX_FILE
    ix.save(path)
    for reason in ix.skipped:
        ctx.out.note(f"warning: skipped {reason}")
    ctx.out.emit(
        {"doc-count": ix.doc_count, "terms": len(ix.df), "path": str(path), "skipped": list(ix.skipped)},
        f"indexed {ix.doc_count} dataset(s), {len(ix.df)} term(s) -> {path}",
    )
    return EXIT_OK


def _cmd_search(args, ctx) -> int:
    query = " ".join(args.query)
    results = search(_load_index(ctx.repo), query, ctx.k)
    _ranking_output(ctx.out, results, {"query": query})
    return EXIT_OK


def _cmd_interact(args, ctx) -> int:
    m = ctx.repo.get(args.ref)
    profile = profile_update(load_profile(ctx.repo.root, ctx.user), m, ctx.lam)
    path = save_profile(ctx.repo.root, profile)
    ctx.out.emit(
        {"user": profile.user_id, "interactions": profile.interaction_count, "path": str(path)},
        f"profile {profile.user_id}: {profile.interaction_count} interaction(s)",
    )
    return EXIT_OK


def _cmd_recommend(args, ctx) -> int:
    profile = load_profile(ctx.repo.root, ctx.user)
    results = recommend(_load_index(ctx.repo), profile, ctx.k, include_seen=args.include_seen)
    _ranking_output(ctx.out, results, {"user": profile.user_id})
    return EXIT_OK


_COMMANDS: dict[str, Callable[..., int]] = {
    "init": _cmd_init,
    "validate": _cmd_validate,
    "hash": _cmd_hash,
    "bump": _cmd_bump,
    "cite": _cmd_cite,
    "diff": _cmd_diff,
    "aggregate": _cmd_aggregate,
    "graph": _cmd_graph,
    "put": _cmd_put,
    "get": _cmd_get,
    "index": _cmd_index,
    "search": _cmd_search,
    "interact": _cmd_interact,
    "recommend": _cmd_recommend,
}


class _Context:
    def __init__(self, args, env, clock, uuid_source, out):
        self.out = out
        self.clock = clock
        self.uuid_source = uuid_source
        self.repo = Repository(args.repo or env.get("DFS_REPO") or DEFAULT_REPO)
        self.k = args.k or 10
        self.lam = 0.3 if args.lam is None else args.lam
        self.user = args.user or "default"


def _exit_code_for(exc: DFSError) -> int:
    if isinstance(exc, (IntegrityError, ImmutabilityError)):
        return EXIT_INTEGRITY
    if isinstance(exc, AggregationError):
        return EXIT_AGGREGATION
    return EXIT_INVALID


def run(
    argv: Sequence[str],
    env: Mapping[str, str] | None = None,
    clock: Callable[[], datetime] = utc_now,
    uuid_source: Callable[[], uuid.UUID] = uuid.uuid4,
    stdout: TextIO | None = None,
    stderr: TextIO | None = None,
) -> int:
    """Run one CLI invocation and return its exit code."""
    env = os.environ if env is None else env
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            args = parser.parse_args(list(argv))
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else EXIT_USAGE
        return EXIT_OK if code == 0 else EXIT_USAGE

    out = _Output(stdout, stderr, bool(args.json))
    try:
        ctx = _Context(args, env, clock, uuid_source, out)
        return _COMMANDS[args.command](args, ctx)
    except CliFailure as exc:
        out.note(f"error: {exc}")
        return exc.code
    except DFSError as exc:
        out.note(f"error: {exc}")
        for finding in getattr(exc, "findings", ()):
            out.note(f"  {finding}")
        return _exit_code_for(exc)
    except ValueError as exc:
        out.note(f"error: {exc}")
        return EXIT_USAGE
    except OSError as exc:
        name = f"{exc.filename}: " if exc.filename else ""
        out.note(f"error: {name}{exc.strerror or exc}")
        return EXIT_INVALID


def main(argv: Sequence[str] | None = None) -> int:
    return run(sys.argv[1:] if argv is None else argv)
