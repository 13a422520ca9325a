"""Command-line pipeline: ingest, embed, transform, index, query, evaluate."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import (
    Chunk,
    ChunkingConfig,
    chunk_document,
    corpus_stats,
    load_chunks,
    load_corpus,
    save_chunks,
    save_corpus,
)
from .embedding import (
    EmbeddingsFile,
    embed_tfidf,
    fit_tfidf,
    load_embeddings_file,
    load_tfidf_model,
    save_embeddings_file,
    save_tfidf_model,
)
from .errors import CorpusFormatError, RemoteProviderError, TopicVecError, ZeroVectorError
from .fileio import atomic_write
from .metrics import evaluate_clustering, mean_reciprocal_rank, recall_at_k
from .projection import export_2d
from .remote import RemoteEmbeddingConfig, fetch_remote_embeddings
from .retrieval import build_index, load_index, save_index, search, two_stage_search
from .synthetic import SyntheticConfig, generate_corpus
from .topics import (
    TransformMethod,
    compute_topic_embeddings,
    compute_topic_embeddings_tfidf,
    transform_entries,
    transform_query,
)


class CliUsageError(Exception):
    """Arguments that parse but do not make sense together."""


def _input(path: str) -> Path:
    resolved = Path(path)
    if not resolved.is_file():
        raise FileNotFoundError(f"no such file: {resolved}")
    return resolved


def _emit_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2)
    if out:
        with atomic_write(out) as handle:
            handle.write(text + "\n")
    else:
        print(text)


def _print_topic_table(stats: dict[str, int]) -> None:
    width = max(len(topic) for topic in list(stats) + ["Topic"])
    print(f"{'Topic':<{width}}  Chunk Count")
    for topic, count in stats.items():
        print(f"{topic:<{width}}  {count}")
    print(f"{'total':<{width}}  {sum(stats.values())}")


def _normalized_entries(
    chunks: Sequence[Chunk], emb: EmbeddingsFile
) -> list[tuple[Chunk, np.ndarray]]:
    entries = []
    for chunk in chunks:
        vec = emb.vectors.get(chunk.id)
        if vec is None:
            raise CorpusFormatError(f"no embedding found for chunk id {chunk.id!r}")
        arr = np.asarray(vec, dtype=np.float64)
        norm = float(np.linalg.norm(arr))
        if norm == 0.0:
            raise ZeroVectorError(f"chunk {chunk.id!r}: zero embedding")
        entries.append((chunk, arr / norm))
    return entries


def _topic_map(args, chunks, entries):
    if getattr(args, "topic_vectors", "mean") == "tfidf":
        if not args.tfidf_model:
            raise CliUsageError("--topic-vectors tfidf requires --tfidf-model")
        model = load_tfidf_model(_input(args.tfidf_model))
        return compute_topic_embeddings_tfidf(model, chunks)
    return compute_topic_embeddings(entries)


def _query_vector(args) -> np.ndarray:
    if getattr(args, "text", None) is not None:
        if not args.tfidf_model:
            raise CliUsageError("--text queries require --tfidf-model")
        model = load_tfidf_model(_input(args.tfidf_model))
        return embed_tfidf(model, args.text)
    if getattr(args, "query_vector", None) is not None:
        try:
            values = json.loads(args.query_vector)
        except json.JSONDecodeError as exc:
            raise CliUsageError(f"--query-vector is not valid JSON: {exc}") from exc
        if not isinstance(values, list) or not values:
            raise CliUsageError("--query-vector must be a non-empty JSON list")
        return np.asarray(values, dtype=np.float64)
    raise CliUsageError("provide a query via --text or --query-vector")


def cmd_ingest(args) -> int:
    docs = load_corpus(_input(args.corpus))
    cfg = ChunkingConfig(chunk_size=args.chunk_size)
    chunks = [chunk for doc in docs for chunk in chunk_document(doc, cfg)]
    save_chunks(chunks, args.out)
    if not args.quiet:
        _print_topic_table(corpus_stats(chunks))
        print(f"wrote {len(chunks)} chunks -> {args.out}")
    return 0


def cmd_embed(args) -> int:
    chunks = load_chunks(_input(args.chunks))
    if args.provider == "tfidf":
        model = fit_tfidf(chunks)
        vectors = {chunk.id: embed_tfidf(model, chunk.text) for chunk in chunks}
        if args.model_out:
            save_tfidf_model(model, args.model_out)
    elif args.provider == "file":
        if not args.vectors:
            raise CliUsageError("--provider file requires --vectors")
        src = load_embeddings_file(_input(args.vectors))
        vectors = {}
        for chunk in chunks:
            if chunk.id not in src.vectors:
                raise CorpusFormatError(
                    f"{args.vectors}: no vector for chunk id {chunk.id!r}"
                )
            vectors[chunk.id] = src.vectors[chunk.id]
    else:
        if not args.endpoint or not args.model:
            raise CliUsageError("--provider remote requires --endpoint and --model")
        cfg = RemoteEmbeddingConfig(
            endpoint_url=args.endpoint,
            model_name=args.model,
            api_key_env_var=args.api_key_env,
            batch_size=args.batch_size,
            timeout=args.timeout,
        )
        embedded = fetch_remote_embeddings(cfg, [chunk.text for chunk in chunks])
        vectors = {chunk.id: vec for chunk, vec in zip(chunks, embedded)}
    if not vectors:
        raise CorpusFormatError(f"{args.chunks}: no chunks to embed")
    save_embeddings_file(args.out, vectors)
    if not args.quiet:
        dim = np.asarray(next(iter(vectors.values()))).shape[0]
        print(f"wrote {len(vectors)} embeddings (dim {dim}) -> {args.out}")
    return 0


def cmd_transform(args) -> int:
    chunks = load_chunks(_input(args.chunks))
    emb = load_embeddings_file(_input(args.embeddings))
    if emb.method is not None:
        raise CorpusFormatError(
            f"{args.embeddings}: already transformed (method {emb.method!r})"
        )
    method = TransformMethod.parse(args.method)
    entries = _normalized_entries(chunks, emb)
    topics = _topic_map(args, chunks, entries)
    matrix = transform_entries(entries, topics, method)
    vectors = {chunk.id: row for (chunk, _), row in zip(entries, matrix)}
    save_embeddings_file(args.out, vectors, method=method.value)
    if not args.quiet:
        print(
            f"transformed {len(vectors)} vectors with {method.value} "
            f"(dim {matrix.shape[1]}) -> {args.out}"
        )
    return 0


def cmd_index(args) -> int:
    chunks = load_chunks(_input(args.chunks))
    emb = load_embeddings_file(_input(args.embeddings))
    if emb.method is not None:
        raise CorpusFormatError(
            f"{args.embeddings}: expected untransformed embeddings "
            f"(the {emb.method!r} transform is applied at build time)"
        )
    method = TransformMethod.parse(args.method)
    entries = _normalized_entries(chunks, emb)
    topics = _topic_map(args, chunks, entries)
    index = build_index(entries, topics, method)
    save_index(index, args.out)
    if not args.quiet:
        print(
            f"indexed {len(index)} chunks, {len(index.topic_vectors)} topics, "
            f"method {method.value}, dim {index.dim} -> {args.out}"
        )
    return 0


def cmd_query(args) -> int:
    index = load_index(_input(args.index))
    query = transform_query(_query_vector(args), index.method)
    if args.two_stage:
        result = two_stage_search(index, query, args.k, args.top_m)
    else:
        result = search(index, query, args.k)
    _emit_json(
        {
            "k": args.k,
            "method": index.method.value,
            "two_stage": bool(args.two_stage),
            "hits": [
                {"chunk_id": hit.chunk_id, "topic": hit.topic, "score": hit.score}
                for hit in result.hits
            ],
        },
        args.out,
    )
    return 0


def cmd_eval_cluster(args) -> int:
    chunks = load_chunks(_input(args.chunks))
    emb = load_embeddings_file(_input(args.embeddings))
    labels = [chunk.topic for chunk in chunks]
    if emb.method is not None:
        method = TransformMethod.parse(emb.method)
        if args.method and TransformMethod.parse(args.method) is not method:
            raise CliUsageError(
                f"--method {args.method!r} disagrees with the file header "
                f"({emb.method!r})"
            )
        rows = []
        for chunk in chunks:
            vec = emb.vectors.get(chunk.id)
            if vec is None:
                raise CorpusFormatError(f"no embedding found for chunk id {chunk.id!r}")
            rows.append(np.asarray(vec, dtype=np.float64))
        points = np.stack(rows)
    else:
        method = TransformMethod.parse(args.method or "original")
        entries = _normalized_entries(chunks, emb)
        topics = _topic_map(args, chunks, entries)
        points = transform_entries(entries, topics, method)
    report = evaluate_clustering(points, labels, method)
    _emit_json(report.to_dict(), args.out)
    if args.out and not args.quiet:
        print(
            f"{method.value}: silhouette {report.silhouette:.4f}, "
            f"davies_bouldin {report.davies_bouldin:.4f}, "
            f"calinski_harabasz {report.calinski_harabasz:.4f} -> {args.out}"
        )
    return 0


def _load_queries(path: Path) -> list[tuple[str, str | None, np.ndarray | None, set[str]]]:
    queries = []
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}: line {lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise CorpusFormatError(f"{path}: line {lineno}: expected a JSON object")
            qid = obj.get("id") or f"q{lineno}"
            text = obj.get("text")
            vector = obj.get("vector")
            if (text is None) == (vector is None):
                raise CorpusFormatError(
                    f"{path}: line {lineno}: provide exactly one of 'text' or 'vector'"
                )
            relevant = obj.get("relevant_ids")
            if not isinstance(relevant, list) or not relevant or not all(
                isinstance(rid, str) for rid in relevant
            ):
                raise CorpusFormatError(
                    f"{path}: line {lineno}: 'relevant_ids' must be a non-empty string list"
                )
            vec = np.asarray(vector, dtype=np.float64) if vector is not None else None
            queries.append((str(qid), text, vec, set(relevant)))
    if not queries:
        raise CorpusFormatError(f"{path}: no queries found")
    return queries


def cmd_eval_retrieval(args) -> int:
    index = load_index(_input(args.index))
    queries = _load_queries(_input(args.queries))
    model = load_tfidf_model(_input(args.tfidf_model)) if args.tfidf_model else None
    known = set(index.ids)
    per_query = []
    rows = []
    for qid, text, vec, relevant in queries:
        unknown = relevant - known
        if unknown:
            raise CorpusFormatError(
                f"query {qid!r}: relevant id {sorted(unknown)[0]!r} is not in the index"
            )
        if vec is None:
            if model is None:
                raise CliUsageError("text queries require --tfidf-model")
            vec = embed_tfidf(model, text)
        query = transform_query(vec, index.method)
        if args.two_stage:
            result = two_stage_search(index, query, args.k, args.top_m)
        else:
            result = search(index, query, args.k)
        per_query.append((result, relevant))
        rows.append(
            {
                "id": qid,
                "recall_at_k": recall_at_k(result, relevant, args.k),
                "reciprocal_rank": mean_reciprocal_rank([(result, relevant)]),
            }
        )
    payload = {
        "k": args.k,
        "n_queries": len(rows),
        "mean_recall_at_k": sum(row["recall_at_k"] for row in rows) / len(rows),
        "mrr": mean_reciprocal_rank(per_query),
        "per_query": rows,
    }
    _emit_json(payload, args.out)
    return 0


def cmd_export_2d(args) -> int:
    chunks = load_chunks(_input(args.chunks))
    emb = load_embeddings_file(_input(args.embeddings))
    ids = []
    labels = []
    rows = []
    for chunk in chunks:
        vec = emb.vectors.get(chunk.id)
        if vec is None:
            raise CorpusFormatError(f"no embedding found for chunk id {chunk.id!r}")
        ids.append(chunk.id)
        labels.append(chunk.topic)
        rows.append(np.asarray(vec, dtype=np.float64))
    projection = export_2d(ids, labels, np.stack(rows), args.out)
    if not args.quiet:
        var = projection.explained_variance
        print(f"wrote {len(ids)} points (variance {var[0]:.4g}, {var[1]:.4g}) -> {args.out}")
    return 0


def cmd_gen_synthetic(args) -> int:
    counts = tuple(int(part) for part in args.counts.split(","))
    cfg = SyntheticConfig(
        n_topics=args.n_topics if args.n_topics is not None else len(counts),
        counts=counts,
        dim=args.dim,
        intra_spread=args.intra_spread,
        inter_spread=args.inter_spread,
        seed=args.seed,
    )
    docs, vectors = generate_corpus(cfg)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_corpus(docs, out_dir / "corpus.jsonl")
    save_embeddings_file(out_dir / "embeddings.jsonl", vectors)
    if not args.quiet:
        print(
            f"generated {len(docs)} documents across {cfg.n_topics} topics "
            f"(dim {cfg.dim}, seed {cfg.seed}) -> {out_dir}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topicvec",
        description="Topic-enhanced document embeddings and two-stage retrieval.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42, help="random seed (default 42)")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="split a corpus into chunks")
    p.add_argument("--corpus", required=True, help="corpus JSONL ({id, topic, text})")
    p.add_argument("--chunk-size", type=int, default=2000)
    p.add_argument("--out", required=True, help="output chunks JSONL")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("embed", parents=[common], help="produce chunk embeddings")
    p.add_argument("--chunks", required=True)
    p.add_argument("--provider", choices=["tfidf", "file", "remote"], default="tfidf")
    p.add_argument("--vectors", help="existing embeddings file (provider=file)")
    p.add_argument("--model-out", help="where to save the fitted TF-IDF model")
    p.add_argument("--endpoint", help="embeddings endpoint URL (provider=remote)")
    p.add_argument("--model", help="remote model name (provider=remote)")
    p.add_argument("--api-key-env", default="EMBEDDINGS_API_KEY")
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("transform", parents=[common], help="apply a topic transform")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--chunks", required=True)
    p.add_argument("--method", required=True, choices=[m.value for m in TransformMethod])
    p.add_argument("--topic-vectors", choices=["mean", "tfidf"], default="mean")
    p.add_argument("--tfidf-model", help="TF-IDF model for --topic-vectors tfidf")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("index", parents=[common], help="build a searchable index")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--chunks", required=True)
    p.add_argument("--method", default="original", choices=[m.value for m in TransformMethod])
    p.add_argument("--topic-vectors", choices=["mean", "tfidf"], default="mean")
    p.add_argument("--tfidf-model")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("query", parents=[common], help="search an index")
    p.add_argument("--index", required=True)
    p.add_argument("--text", help="query text (requires --tfidf-model)")
    p.add_argument("--tfidf-model")
    p.add_argument("--query-vector", help="query vector as a JSON list")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--two-stage", action="store_true")
    p.add_argument("--top-m", type=int, default=1, help="topics kept in stage 1")
    p.add_argument("--out", help="write hits JSON here instead of stdout")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("eval-cluster", parents=[common], help="cluster validity indices")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--chunks", required=True)
    p.add_argument("--method", choices=[m.value for m in TransformMethod])
    p.add_argument("--topic-vectors", choices=["mean", "tfidf"], default="mean")
    p.add_argument("--tfidf-model")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_eval_cluster)

    p = sub.add_parser("eval-retrieval", parents=[common], help="recall@k and MRR")
    p.add_argument("--index", required=True)
    p.add_argument("--queries", required=True, help="JSONL with text|vector + relevant_ids")
    p.add_argument("--tfidf-model")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--two-stage", action="store_true")
    p.add_argument("--top-m", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_retrieval)

    p = sub.add_parser("export-2d", parents=[common], help="PCA projection to CSV")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--chunks", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_2d)

    p = sub.add_parser("gen-synthetic", parents=[common], help="generate a labeled corpus")
    p.add_argument("--counts", required=True, help="comma-separated chunk counts per topic")
    p.add_argument("--n-topics", type=int, help="defaults to the number of counts")
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--intra-spread", type=float, default=1.0)
    p.add_argument("--inter-spread", type=float, default=1.0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen_synthetic)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliUsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RemoteProviderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (TopicVecError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
