"""Command-line interface.

Exit codes: 0 success, 1 error (bad input, bad flags), 2 solver refusal
(no certificate, failed verification, rank-deficient state, non-convergence).
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .bipartite import SolveConfig, solve_bipartite, verify_certificate
from .errors import DomainError, EntroposepError, IterationError, ValidationError
from .hermitian import SpectralData, as_density, as_hermitian, ppt_min_eigenvalue
from .kfunctional import k_grad_eigen, k_value
from .matrix_io import matrix_from_json, matrix_to_json, read_json, write_json
from .single import EnsembleParam, sample_ensemble, solve_single
from .smeared import SmearedDecomposition, sample_smeared, smear
from .sphere import sample_unit_vectors

SEED_ENV = "ENTROPOSEP_SEED"
EXIT_OK, EXIT_ERROR, EXIT_REFUSED = 0, 1, 2


def _default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(f"{SEED_ENV} must be an integer, got {raw!r}")


def _load_state(path, dims_flag=None):
    obj = read_json(path)
    m, dims = matrix_from_json(obj)
    if dims_flag:
        dims = _parse_dims(dims_flag)
    return as_density(m, dims=dims)


def _parse_dims(text):
    try:
        a, b = (int(t) for t in text.split(","))
    except ValueError:
        raise ValidationError(f"--dims must look like 'n,m', got {text!r}")
    return a, b


def _emit(args, obj):
    if getattr(args, "out", None):
        write_json(args.out, obj)


def cmd_kval(args):
    if args.eigs is not None:
        try:
            xs = [float(t) for t in args.eigs.split(",")]
        except ValueError:
            raise ValidationError(f"--eigs must be comma-separated numbers, got {args.eigs!r}")
    else:
        m, _ = matrix_from_json(read_json(args.infile))
        xs = list(np.linalg.eigvalsh(as_hermitian(m)))
    print(f"{k_value(xs):.10g}")
    if args.grad:
        print(" ".join(f"{g:.10g}" for g in k_grad_eigen(xs)))
    return EXIT_OK


def cmd_solve_single(args):
    rho = _load_state(args.infile)
    rep = solve_single(rho, tol=args.tol)
    print(f"iterations {rep.iterations}")
    print(f"residual {rep.residual:.3e}")
    print(f"entropy {rep.entropy:.10g}")
    print("eigenvalues " + " ".join(f"{x:.10g}" for x in rep.param.eigenvalues))
    out = matrix_to_json(rep.X)
    out.update(kind="ensemble", eigenvalues=[float(x) for x in rep.param.eigenvalues],
               iterations=rep.iterations, residual=rep.residual, entropy=rep.entropy,
               tol=args.tol)
    _emit(args, out)
    return EXIT_OK


def smeared_to_json(sd: SmearedDecomposition) -> dict:
    vecs = matrix_to_json(sd.spectral.eigenvectors)
    return {
        "kind": "smeared",
        "n": sd.n,
        "order": sd.order,
        "eigenvalues": [float(p) for p in sd.spectral.eigenvalues],
        "eigenvectors": {"re": vecs["re"], "im": vecs["im"]},
        "coeffs": [float(q) for q in sd.coeffs],
        "log_norm_const": sd.norm_const,
    }


def smeared_from_json(obj) -> SmearedDecomposition:
    try:
        n = obj["n"]
        vecs, _ = matrix_from_json({"n": n, **obj["eigenvectors"]})
        spec = SpectralData(np.array(obj["eigenvalues"], dtype=float), vecs)
        return SmearedDecomposition(spec, int(obj["order"]), np.array(obj["coeffs"], dtype=float),
                                    float(obj["log_norm_const"]))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"smeared artifact is missing field {exc}") from exc


def cmd_smear(args):
    rho = _load_state(args.infile)
    sd = smear(rho, args.order)
    print(f"order {sd.order}")
    print("coeffs " + " ".join(f"{q:.10g}" for q in sd.coeffs))
    print(f"log_norm_const {sd.norm_const:.10g}")
    _emit(args, smeared_to_json(sd))
    return EXIT_OK


def _cert_json(res) -> dict:
    out = matrix_to_json(res.X, res.dims)
    out.update(kind="certificate" if res.issued else "no_certificate",
               residual=res.residual, residual_noise=res.residual_noise,
               iterations=res.iterations, seed=res.seed)
    if res.issued:
        out.update(accept_threshold=res.accept_threshold, samples_train=res.samples_train,
                   samples_validate=res.samples_validate)
    else:
        out.update(reason=res.reason, detail=res.detail,
                   ppt_min_eigenvalue=res.ppt_min_eigenvalue)
    return out


def cmd_solve_bipartite(args):
    rho = _load_state(args.infile, args.dims)
    cfg = SolveConfig(pool_size=args.pool, refresh_epochs=args.epochs,
                      accept_threshold=args.threshold, diverge_norm=args.diverge_norm,
                      max_iterations=args.max_iterations, seed=args.seed,
                      low_discrepancy=args.low_discrepancy,
                      validate_size=args.validate_samples, threads=args.threads)
    res = solve_bipartite(rho, cfg)
    for e in res.trace:
        print(f"epoch {e.epoch} start_residual {e.start_residual:.3e} iterations {e.iterations} "
              f"surrogate {e.surrogate_end:.10g} |X| {e.x_norm:.4g} ({e.message})")
    _emit(args, _cert_json(res))
    if res.issued:
        print(f"certificate issued: residual {res.residual:.3e} "
              f"(threshold {res.accept_threshold:.3e}, noise {res.residual_noise:.3e})")
        return EXIT_OK
    print(f"no certificate ({res.reason}): {res.detail}")
    print(f"ppt_min_eigenvalue {res.ppt_min_eigenvalue:.10g}")
    print("this is not a proof of entanglement")
    return EXIT_REFUSED


def cmd_verify(args):
    rho = _load_state(args.infile, args.dims)
    obj = read_json(args.cert)
    x, cdims = matrix_from_json(obj)
    dims = rho.dims or cdims
    rep = verify_certificate(rho, x, args.samples, args.seed, dims=dims, threads=args.threads)
    print(f"residual {rep.residual:.3e} noise {rep.noise:.3e} max_sigma {rep.max_sigma:.3f}")
    print("PASS" if rep.passed else "FAIL")
    return EXIT_OK if rep.passed else EXIT_REFUSED


def cmd_sample(args):
    rng = np.random.default_rng(args.seed)
    if args.ensemble:
        x, _ = matrix_from_json(read_json(args.ensemble))
        vecs = sample_ensemble(EnsembleParam.from_matrix(x), rng, args.count)
    elif args.smeared:
        vecs = sample_smeared(smeared_from_json(read_json(args.smeared)), rng, args.count)
    else:
        vecs = sample_unit_vectors(args.dim, args.count, rng)
    lines = "".join(json.dumps({"re": [float(a) for a in v.real], "im": [float(a) for a in v.imag]})
                    + "\n" for v in vecs)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(lines)
    else:
        sys.stdout.write(lines)
    return EXIT_OK


def cmd_ppt(args):
    rho = _load_state(args.infile, args.dims)
    lam = ppt_min_eigenvalue(rho)
    print(f"ppt_min_eigenvalue {lam:.10g}")
    print("NPT (entangled)" if lam < -1e-10 else "PPT")
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="sampling threads (results do not depend on it)")

    p = argparse.ArgumentParser(prog="entroposep",
                                description="Maximum-entropy ensembles and separability certificates.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("kval", parents=[common], help="evaluate K from eigenvalues")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--eigs", help="comma-separated eigenvalues of X")
    g.add_argument("--in", dest="infile", help="matrix JSON for X")
    s.add_argument("--grad", action="store_true", help="also print dK/dx_j")
    s.set_defaults(func=cmd_kval)

    s = sub.add_parser("solve-single", parents=[common], help="max-entropy ensemble of a state")
    s.add_argument("--in", dest="infile", required=True)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve_single)

    s = sub.add_parser("smear", parents=[common], help="smeared spectral decomposition")
    s.add_argument("--in", dest="infile", required=True)
    s.add_argument("--order", type=int, default=None, help="smear order K (default: minimal valid)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_smear)

    s = sub.add_parser("solve-bipartite", parents=[common], help="search for a separability certificate")
    s.add_argument("--in", dest="infile", required=True)
    s.add_argument("--dims", help="override subsystem dims, e.g. 2,2")
    s.add_argument("--pool", type=int, default=200_000)
    s.add_argument("--epochs", type=int, default=8)
    s.add_argument("--threshold", type=float, default=None)
    s.add_argument("--diverge-norm", type=float, default=60.0)
    s.add_argument("--max-iterations", type=int, default=200)
    s.add_argument("--validate-samples", type=int, default=1_000_000)
    s.add_argument("--low-discrepancy", action="store_true")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve_bipartite)

    s = sub.add_parser("verify", parents=[common], help="check a certificate on a fresh pool")
    s.add_argument("--in", dest="infile", required=True)
    s.add_argument("--cert", required=True)
    s.add_argument("--dims")
    s.add_argument("--samples", type=int, default=500_000)
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("sample", parents=[common], help="emit unit vectors as NDJSON")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--ensemble", help="ensemble JSON from solve-single")
    g.add_argument("--smeared", help="smeared JSON from smear")
    g.add_argument("--dim", type=int, help="uniform vectors in this dimension")
    s.add_argument("--count", type=int, default=1000)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("ppt", parents=[common], help="minimum eigenvalue of the partial transpose")
    s.add_argument("--in", dest="infile", required=True)
    s.add_argument("--dims")
    s.set_defaults(func=cmd_ppt)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        if getattr(args, "seed", "unset") is None:
            args.seed = _default_seed()
        return args.func(args)
    except (DomainError, IterationError) as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except (EntroposepError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main():
    sys.exit(run())

