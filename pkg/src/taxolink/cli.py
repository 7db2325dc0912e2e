"""Command-line entry point: ingest, embed, link, eval, compare.

Runs are driven by a TOML config plus flag overrides (flags win). Exit codes
are a stable contract: 0 success, 1 per-document failures, 2 ingestion
errors, 3 provider/labeler errors, 4 evaluation id mismatch.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from . import entity_linking, evaluation
from .embedding import (
    FieldKind,
    HashProvider,
    ProviderError,
    ReplayProvider,
    ServiceProvider,
    Strategy,
    build_embeddings,
    cache_load,
    cache_save,
)
from .entity_recognition import (
    Document,
    GoldReplayLabeler,
    LabelerError,
    Mention,
    ServiceLabeler,
    sentences_from_tokens,
)
from .evaluation import EvalError, EvalMismatchError, EvalReport
from .sentence_linking import SentenceQuery, link_sentence
from .taxonomy import EntityKind, IngestError, load_eqf, load_occupations, load_skills
from .vector_index import RankedCandidate, build_index

EXIT_OK = 0
EXIT_DOC_FAILURES = 1
EXIT_INGEST = 2
EXIT_PROVIDER = 3
EXIT_EVAL = 4

BRIDGE_ADDR_ENV = "TAXOLINK_BRIDGE_ADDR"

_KIND_ALIASES = {
    "occupation": EntityKind.OCCUPATION,
    "skill": EntityKind.SKILL,
    "qualification": EntityKind.QUALIFICATION,
}


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    paths: dict[str, str] = field(default_factory=dict)
    strategy: Strategy = Strategy.PREFERRED_LABEL
    k: int = 10
    batch_size: int = 64
    provider_spec: str = "hash:16"
    labeler_spec: str = ""
    kind: EntityKind | None = None
    version_tag: str = ""
    base_dir: Path = field(default_factory=Path)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
        cfg = cls(base_dir=path.parent)
        cfg.paths = dict(raw.get("paths", {}))
        cfg.version_tag = raw.get("version_tag", "")
        emb = raw.get("embedding", {})
        if "strategy" in emb:
            cfg.strategy = Strategy.parse(emb["strategy"])
        cfg.batch_size = int(emb.get("batch_size", 64))
        cfg.provider_spec = raw.get("provider", {}).get("spec", cfg.provider_spec)
        cfg.labeler_spec = raw.get("labeler", {}).get("spec", cfg.labeler_spec)
        link = raw.get("link", {})
        cfg.k = int(link.get("k", cfg.k))
        if "kind" in link:
            cfg.kind = parse_kind(link["kind"])
        if cfg.k < 1:
            raise ConfigError("k must be >= 1")
        return cfg

    def resolve(self, rel: str) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else self.base_dir / p

    def reference_path(self, kind: EntityKind) -> Path | None:
        key = {EntityKind.OCCUPATION: "occupations", EntityKind.SKILL: "skills",
               EntityKind.QUALIFICATION: "eqf"}[kind]
        raw = self.paths.get(key)
        return self.resolve(raw) if raw else None

    def cache_dir(self) -> Path:
        return self.resolve(self.paths.get("cache_dir", "caches"))

    def cache_path(self, kind: EntityKind, strategy: Strategy) -> Path:
        return self.cache_dir() / f"{kind.value.lower()}_{strategy.value}.tlk"


def parse_kind(value: str) -> EntityKind:
    kind = _KIND_ALIASES.get(value.strip().lower())
    if kind is None:
        raise ConfigError(f"unknown kind {value!r} (occupation|skill|qualification)")
    return kind


def _service_address(arg: str) -> str:
    return os.environ.get(BRIDGE_ADDR_ENV, arg)


def make_provider(spec: str):
    name, _, arg = spec.partition(":")
    if name == "hash":
        return HashProvider(int(arg) if arg else 16)
    if name == "replay":
        return ReplayProvider.from_file(arg)
    if name == "service":
        return ServiceProvider(_service_address(arg))
    raise ConfigError(f"unknown provider spec {spec!r} (hash:|replay:|service:)")


def make_labeler(spec: str):
    name, _, arg = spec.partition(":")
    if name == "gold":
        return GoldReplayLabeler.from_file(arg)
    if name == "service":
        return ServiceLabeler(_service_address(arg))
    raise ConfigError(f"unknown labeler spec {spec!r} (gold:|service:)")


def _load_reference(cfg: RunConfig, kind: EntityKind):
    path = cfg.reference_path(kind)
    if path is None:
        return None
    loader = {EntityKind.OCCUPATION: load_occupations, EntityKind.SKILL: load_skills,
              EntityKind.QUALIFICATION: load_eqf}[kind]
    return loader(path, cfg.version_tag)


def _resolve_provider_spec(cfg: RunConfig, spec: str) -> str:
    name, _, arg = spec.partition(":")
    if name == "replay":
        return f"replay:{cfg.resolve(arg)}"
    if name == "gold":
        return f"gold:{cfg.resolve(arg)}"
    return spec


def cmd_ingest(cfg: RunConfig) -> int:
    parts = []
    for kind, label in ((EntityKind.OCCUPATION, "occupations"),
                        (EntityKind.SKILL, "skills"),
                        (EntityKind.QUALIFICATION, "qualifications")):
        refset = _load_reference(cfg, kind)
        if refset is not None:
            parts.append(f"{label}={len(refset)}")
    if not parts:
        raise IngestError("no reference paths configured")
    print(" ".join(parts))
    return EXIT_OK


def cmd_embed(cfg: RunConfig, kinds: list[EntityKind]) -> int:
    provider = make_provider(_resolve_provider_spec(cfg, cfg.provider_spec))
    cfg.cache_dir().mkdir(parents=True, exist_ok=True)
    for kind in kinds:
        refset = _load_reference(cfg, kind)
        if refset is None:
            raise IngestError(f"no reference path configured for {kind.value}")
        records = build_embeddings(refset, cfg.strategy, provider, batch_size=cfg.batch_size)
        out = cfg.cache_path(kind, cfg.strategy)
        cache_save(records, out, normalized=True)
        print(f"{kind.value.lower()}: {len(records)} records -> {out}")
    return EXIT_OK


def _read_jsonl(stream) -> list[dict]:
    docs = []
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            docs.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise EvalError(f"input line {line_no}: invalid JSON ({exc})") from exc
    return docs


def _load_indexes(cfg: RunConfig, kinds: list[EntityKind]) -> dict:
    indexes = {}
    for kind in kinds:
        path = cfg.cache_path(kind, cfg.strategy)
        if path.is_file():
            indexes[kind] = build_index(cache_load(path))
    return indexes


def cmd_link(cfg: RunConfig, mode: str, input_stream, output_stream, jobs: int) -> int:
    docs = _read_jsonl(input_stream)
    if mode in ("sl", "title"):
        if cfg.kind is None:
            raise ConfigError("link mode sl/title requires a kind (config link.kind or --kind)")
        indexes = _load_indexes(cfg, [cfg.kind])
        if cfg.kind not in indexes:
            raise ConfigError(f"no cache built for {cfg.kind.value} at {cfg.cache_path(cfg.kind, cfg.strategy)}")
        index = indexes[cfg.kind]
        provider = make_provider(_resolve_provider_spec(cfg, cfg.provider_spec))

        def process(obj: dict) -> dict:
            text = obj.get("title") if mode == "title" else obj.get("text")
            if mode == "title" and not text:
                text = obj.get("text")
            query = SentenceQuery(text=text or "", entity_kind=cfg.kind, k=cfg.k)
            result = link_sentence(query, index, provider)
            return {
                "id": obj.get("id", ""),
                "kind": cfg.kind.value,
                "candidates": [
                    {"node_id": c.node_id, "score": c.score} for c in result.candidates
                ],
            }

    elif mode == "el":
        indexes = _load_indexes(cfg, list(EntityKind))
        if not indexes:
            raise ConfigError(f"no caches found under {cfg.cache_dir()}")
        provider = make_provider(_resolve_provider_spec(cfg, cfg.provider_spec))
        if not cfg.labeler_spec:
            raise ConfigError("link mode el requires a labeler (config labeler.spec)")
        labeler = make_labeler(_resolve_provider_spec(cfg, cfg.labeler_spec))

        def process(obj: dict) -> dict:
            doc_id = str(obj.get("id", ""))
            sentences = None
            if isinstance(labeler, GoldReplayLabeler):
                token_lists = labeler.doc_sentences(doc_id)
                if token_lists is not None:
                    sentences = sentences_from_tokens(token_lists)
            if sentences is not None:
                results = entity_linking.link_sentences(sentences, labeler, indexes, provider, cfg.k)
            else:
                doc = Document(text=obj.get("text", ""), id=doc_id)
                results = entity_linking.link_document(doc, labeler, indexes, provider, cfg.k)
            return entity_linking.result_to_json(doc_id, results)

    else:
        raise ConfigError(f"unknown link mode {mode!r} (sl|el|title)")

    failures = 0
    outputs: list[tuple[dict | None, str | None]] = []
    if jobs > 1:
        def safe(obj):
            try:
                return process(obj), None
            except Exception as exc:  # noqa: BLE001 - per-doc isolation
                return None, f"{obj.get('id', '?')}: {exc}"

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(safe, docs))
    else:
        for obj in docs:
            try:
                outputs.append((process(obj), None))
            except Exception as exc:  # noqa: BLE001
                outputs.append((None, f"{obj.get('id', '?')}: {exc}"))

    for payload, error in outputs:
        if error is not None:
            failures += 1
            print(f"error: {error}", file=sys.stderr)
        else:
            output_stream.write(json.dumps(payload, ensure_ascii=False) + "\n")
    output_stream.flush()
    return EXIT_DOC_FAILURES if failures else EXIT_OK


def _label_resolver(cfg: RunConfig, kind: EntityKind):
    """node id -> evaluation label; for qualifications the EQF level bucket."""
    if kind is not EntityKind.QUALIFICATION:
        return None
    refset = _load_reference(cfg, kind)
    if refset is None:
        raise ConfigError("qualification evaluation needs paths.eqf to resolve levels")
    mapping = {node.id: node.retrieval_label for node in refset}
    return lambda node_id: mapping.get(node_id, node_id)


def _mention_results_from_json(obj: dict) -> list[entity_linking.MentionLinkResult]:
    results = []
    for m in obj.get("mentions", []):
        mention = Mention(
            entity_kind=EntityKind(m["kind"]),
            sentence_index=0,
            token_span=tuple(m.get("token_span", (0, 0))),
            char_span=tuple(m.get("char_span", (0, 0))),
            surface=m.get("surface", ""),
            joined=m.get("surface", ""),
        )
        candidates = tuple(
            RankedCandidate(node_id=c["node_id"], score=c["score"],
                            field_kind=FieldKind.PREFERRED_LABEL)
            for c in m.get("candidates", [])
        )
        results.append(entity_linking.MentionLinkResult(mention=mention, candidates=candidates))
    return results


def cmd_eval(cfg: RunConfig, mode: str, results_path: Path, gold_path: Path,
             out_path: Path | None, aggregate: bool) -> int:
    instances = evaluation.load_eval_set(gold_path)
    if cfg.kind is None and instances:
        try:
            cfg.kind = parse_kind(instances[0].entity_kind)
        except ConfigError:
            cfg.kind = None
    kind_name = cfg.kind.value if cfg.kind else (instances[0].entity_kind if instances else "")
    label_of = _label_resolver(cfg, cfg.kind) if cfg.kind else None

    with open(results_path, encoding="utf-8") as fh:
        result_objs = _read_jsonl(fh)

    if mode in ("sl", "title"):
        results_by_id = {
            str(obj.get("id", "")): [c["node_id"] for c in obj.get("candidates", [])]
            for obj in result_objs
        }
        report = evaluation.evaluate_sentence_level(results_by_id, instances, mode, kind_name,
                                                    label_of=label_of)
    elif mode == "el":
        mention_results = {str(obj.get("id", "")): _mention_results_from_json(obj)
                           for obj in result_objs}
        if aggregate:
            results_by_id = {
                doc_id: [c.node_id for c in entity_linking.aggregate_to_sentence(results)]
                for doc_id, results in mention_results.items()
            }
            report = evaluation.evaluate_sentence_level(results_by_id, instances, "el", kind_name,
                                                        label_of=label_of)
        else:
            report = evaluation.evaluate_entity_level(mention_results, instances, "el", kind_name,
                                                      label_of=label_of)
    else:
        raise ConfigError(f"unknown eval mode {mode!r} (sl|el|title)")

    print(report.render())
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(report.to_json(), fh, ensure_ascii=False, indent=2)
            fh.write("\n")
    return EXIT_OK


def _load_reports(paths: str | None) -> dict[str, EvalReport]:
    reports: dict[str, EvalReport] = {}
    if not paths:
        return reports
    for part in paths.split(","):
        with open(part.strip(), encoding="utf-8") as fh:
            report = EvalReport.from_json(json.load(fh))
        reports[report.entity_kind] = report
    return reports


def cmd_compare(sl: str | None, el: str | None, title: str | None,
                out_path: Path | None) -> int:
    table = evaluation.compare_methods(_load_reports(sl), _load_reports(el), _load_reports(title))
    print(table.render())
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(table.to_json(), fh, ensure_ascii=False, indent=2)
            fh.write("\n")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="taxolink",
                                     description="Link job-vacancy text to taxonomy nodes.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--kind", help="occupation|skill|qualification")
        p.add_argument("--k", type=int, help="candidates per query")
        p.add_argument("--strategy", help="embedding strategy s1..s5")
        p.add_argument("--out", help="output file path")

    p_ingest = sub.add_parser("ingest", help="load and validate reference sets")
    common(p_ingest)

    p_embed = sub.add_parser("embed", help="build embedding caches")
    common(p_embed)

    p_link = sub.add_parser("link", help="link documents from a JSON Lines stream")
    common(p_link)
    p_link.add_argument("--mode", choices=("sl", "el", "title"), default="sl")
    p_link.add_argument("--jobs", type=int, default=1)
    p_link.add_argument("--in", dest="input", help="input JSONL (default stdin)")

    p_eval = sub.add_parser("eval", help="score link results against a gold set")
    common(p_eval)
    p_eval.add_argument("--mode", choices=("sl", "el", "title"), default="sl")
    p_eval.add_argument("--results", required=True)
    p_eval.add_argument("--gold", required=True)
    p_eval.add_argument("--aggregate", action="store_true",
                        help="aggregate entity-linking output to sentence level")

    p_cmp = sub.add_parser("compare", help="cross-method accuracy table")
    p_cmp.add_argument("--sl", help="sentence-linking report JSON (comma separated per kind)")
    p_cmp.add_argument("--el", help="entity-linking report JSON")
    p_cmp.add_argument("--title", help="title-linking report JSON")
    p_cmp.add_argument("--out", help="output file path")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "compare":
            return cmd_compare(args.sl, args.el, args.title,
                               Path(args.out) if args.out else None)

        cfg = RunConfig.load(args.config)
        if args.kind:
            cfg.kind = parse_kind(args.kind)
        if args.k is not None:
            if args.k < 1:
                raise ConfigError("k must be >= 1")
            cfg.k = args.k
        if args.strategy:
            cfg.strategy = Strategy.parse(args.strategy)

        if args.command == "ingest":
            return cmd_ingest(cfg)
        if args.command == "embed":
            kinds = [cfg.kind] if cfg.kind else [k for k in EntityKind
                                                 if cfg.reference_path(k) is not None]
            if not kinds:
                raise IngestError("no reference paths configured")
            return cmd_embed(cfg, kinds)
        if args.command == "link":
            out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
            src = open(args.input, encoding="utf-8") if args.input else sys.stdin
            try:
                return cmd_link(cfg, args.mode, src, out, max(1, args.jobs))
            finally:
                if args.out:
                    out.close()
                if args.input:
                    src.close()
        if args.command == "eval":
            return cmd_eval(cfg, args.mode, Path(args.results), Path(args.gold),
                            Path(args.out) if args.out else None, args.aggregate)
        raise ConfigError(f"unknown command {args.command!r}")
    except (IngestError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except (ProviderError, LabelerError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except EvalMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EVAL
    except EvalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EVAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INGEST


if __name__ == "__main__":
    sys.exit(main())
