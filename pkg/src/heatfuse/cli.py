"""Command-line frontend.

Subcommands: ``spectrum``, ``describe``, ``vocab``, ``benchmark``,
``synth``, ``export-heatfield``. Every command is a pure function of its
inputs, configuration, and seeds; re-runs produce byte-identical
outputs. Failures exit nonzero with a one-line JSON error on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import descriptors as desc
from . import diffusion, meshio, pipeline, retrieval, spectrum, synth
from .config import DESCRIPTOR_KINDS, SCHEMES, RunConfig, load_config
from .errors import DescriptorError, HeatfuseError
from .mesh import content_hash

_CONFIG_FLOATS = ("rho", "color_scale", "truncation_eps", "solver_tol")
_CONFIG_INTS = ("k", "vocab_size", "vocab_seed", "fps_count", "dist_bins", "color_bins", "solver_seed")
_CONFIG_LISTS = ("etas", "dist_etas", "times", "dist_times")


def _add_config_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration")
    g.add_argument("--config", help="JSON file of RunConfig overrides")
    for name in _CONFIG_FLOATS:
        g.add_argument(f"--{name.replace('_', '-')}", type=float, default=None)
    for name in _CONFIG_INTS:
        g.add_argument(f"--{name.replace('_', '-')}", type=int, default=None)
    for name in _CONFIG_LISTS:
        g.add_argument(
            f"--{name.replace('_', '-')}",
            default=None,
            help="comma-separated values",
        )
    g.add_argument("--descriptor", choices=DESCRIPTOR_KINDS, default=None)
    g.add_argument("--scheme", choices=SCHEMES, default=None)
    g.add_argument("--uniform-bof", action="store_true", help="disable area weighting")
    g.add_argument("--dense-laplacian", action="store_true")
    g.add_argument("--srgb-coords", action="store_true", help="embed raw sRGB (ablation)")


def _config_from_args(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = {}
    for name in _CONFIG_FLOATS + _CONFIG_INTS:
        val = getattr(args, name)
        if val is not None:
            overrides[name] = val
    for name in _CONFIG_LISTS:
        val = getattr(args, name)
        if val is not None:
            overrides[name] = tuple(float(x) for x in str(val).split(","))
    if args.descriptor is not None:
        overrides["descriptor"] = args.descriptor
    if args.scheme is not None:
        overrides["scheme"] = args.scheme
    if args.uniform_bof:
        overrides["area_weighted_bof"] = False
    if args.dense_laplacian:
        overrides["dense_laplacian"] = True
    if args.srgb_coords:
        overrides["use_srgb_coords"] = True
    return cfg.updated(**overrides)


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True))


# ---------------------------------------------------------------- subcommands


def cmd_spectrum(args) -> None:
    cfg = _config_from_args(args)
    mesh = meshio.load_mesh(args.mesh)
    eta = args.eta
    out = Path(args.out)
    key = pipeline.basis_cache_key(mesh, eta, cfg)
    if out.exists():
        header = spectrum.read_header(out)
        if header.get("cache_key") == key:
            _emit({"out": str(out), "cache_hit": True, "k": header["k"], "n": header["n"]})
            return
    basis = pipeline.solve_basis(mesh, eta, cfg)
    spectrum.save_basis(basis, out, extra={"cache_key": key, "config": cfg.to_dict()})
    _emit({"out": str(out), "cache_hit": False, "k": basis.n_pairs - 1, "n": basis.n_vertices})


def cmd_describe(args) -> None:
    cfg = _config_from_args(args)
    mesh = meshio.load_mesh(args.mesh)
    vocabs = None
    if cfg.descriptor in ("hks_bof", "chks_bof_multiscale"):
        if not args.vocab:
            raise DescriptorError(
                f"descriptor {cfg.descriptor!r} requires --vocab VOCAB_FILE"
            )
        vocabs = desc.load_vocabulary_set(args.vocab)
    d = pipeline.compute_descriptor(mesh, cfg, vocabs=vocabs, cache_dir=args.cache_dir)
    meta = pipeline.descriptor_meta(mesh, cfg, vocabs)
    desc.save_descriptor(d, args.out, meta=meta)
    _emit({"out": str(args.out), "descriptor": cfg.descriptor})


def cmd_vocab(args) -> None:
    cfg = _config_from_args(args)
    meshes = [meshio.load_mesh(p) for p in args.meshes]
    etas = (
        tuple(float(x) for x in args.vocab_etas.split(","))
        if args.vocab_etas
        else pipeline.descriptor_etas(cfg) or (0.0,)
    )
    vocabs = pipeline.build_vocabulary_set(meshes, cfg, etas=etas, cache_dir=args.cache_dir)
    params = {
        "config": cfg.to_dict(),
        "mesh_hashes": [content_hash(m) for m in meshes],
        "etas": list(etas),
    }
    desc.save_vocabulary_set(vocabs, args.out, params=params)
    _emit({"out": str(args.out), "etas": list(etas), "vocab_size": cfg.vocab_size})


def cmd_benchmark(args) -> None:
    cfg = _config_from_args(args)
    manifest = retrieval.load_manifest(args.manifest)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cache_dir = out_dir / "cache"

    vocabs = None
    if cfg.descriptor in ("hks_bof", "chks_bof_multiscale"):
        vocab_path = out_dir / "vocab.json"
        if args.vocab:
            vocabs = desc.load_vocabulary_set(args.vocab)
        elif vocab_path.exists():
            vocabs = desc.load_vocabulary_set(vocab_path)
        else:
            nulls = [meshio.load_mesh(n.path) for n in manifest.nulls]
            vocabs = pipeline.build_vocabulary_set(
                nulls, cfg, etas=pipeline.descriptor_etas(cfg), cache_dir=cache_dir
            )
            desc.save_vocabulary_set(vocabs, vocab_path, params={"config": cfg.to_dict()})

    rankings = retrieval.rank_queries(
        manifest,
        lambda mesh: pipeline.compute_descriptor(mesh, cfg, vocabs=vocabs, cache_dir=cache_dir),
        lambda a, b: pipeline.descriptor_distance(cfg, a, b),
    )
    report = retrieval.evaluate(manifest, rankings)
    csv_path, json_path = retrieval.write_report(report, out_dir)
    payload = {
        "csv": str(csv_path),
        "json": str(json_path),
        "overall_map": report.overall_map,
    }
    if not args.no_figures:
        from .plotting import render_report_figures

        figures = render_report_figures(report, out_dir / "figures")
        payload["figures"] = [str(p) for p in figures]
    _emit(payload)


def cmd_synth(args) -> None:
    spec = synth.preset_spec(args.preset, seed=args.seed, mesh_format=args.format)
    manifest = synth.build_benchmark(spec, args.out_dir)
    _emit(
        {
            "out_dir": str(args.out_dir),
            "manifest": str(Path(args.out_dir) / "manifest.json"),
            "nulls": len(manifest.nulls),
            "queries": len(manifest.queries),
        }
    )


def cmd_export_heatfield(args) -> None:
    cfg = _config_from_args(args)
    mesh = meshio.load_mesh(args.mesh)
    basis = pipeline.get_basis(mesh, args.eta, cfg, cache_dir=args.cache_dir)
    values = diffusion.heat_kernel(basis, args.t, args.source)
    mass_sum = float((values * basis.mass).sum())

    from .plotting import scalar_to_colors

    colored = mesh.with_colors(scalar_to_colors(values))
    meshio.save_mesh(colored, args.out)
    _emit({"out": str(args.out), "mass_sum": mass_sum, "t": args.t, "eta": args.eta})


# --------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heatfuse",
        description="Diffusion-geometry fusion of mesh geometry and per-vertex color",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="solve and cache a spectral basis")
    p.add_argument("mesh")
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--out", required=True)
    _add_config_args(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("describe", help="compute a shape descriptor")
    p.add_argument("mesh")
    p.add_argument("--vocab", help="vocabulary set JSON (BoF descriptors)")
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--out", required=True)
    _add_config_args(p)
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("vocab", help="cluster a vocabulary from meshes")
    p.add_argument("meshes", nargs="+")
    p.add_argument("--vocab-etas", default=None, help="comma-separated eta values")
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--out", required=True)
    _add_config_args(p)
    p.set_defaults(func=cmd_vocab)

    p = sub.add_parser("benchmark", help="run retrieval over a manifest")
    p.add_argument("manifest")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--vocab", help="reuse an existing vocabulary set")
    p.add_argument("--no-figures", action="store_true")
    _add_config_args(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("synth", help="generate a synthetic benchmark")
    p.add_argument("--preset", choices=sorted(synth.PRESETS), default="demo")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("ply", "obj"), default="ply")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("export-heatfield", help="write a heat-kernel row as colored PLY")
    p.add_argument("mesh")
    p.add_argument("--source", type=int, required=True)
    p.add_argument("--t", type=float, default=1024.0)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--out", required=True)
    _add_config_args(p)
    p.set_defaults(func=cmd_export_heatfield)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except HeatfuseError as exc:
        sys.stderr.write(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n"
        )
        return 1
    except Exception as exc:  # anything else still reports machine-readably
        sys.stderr.write(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n"
        )
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
