"""Command line front end.

Exit codes: 0 success, 1 domain failure, 2 I/O or parse failure.
"""

from __future__ import annotations

import json
from pathlib import Path

import click
import numpy as np

from . import io
from .adjustment import LengthMismatch
from .appendix import NotIdentityModel, Relation, appendix_covariance, engine_covariance, relation_operands
from .estimators import CovarianceAdjuster, DLMForecaster
from .model import NoTransferExists, compute_transfer, validate_model
from .simulate import ResidualGenerator, generator_beliefs, monte_carlo_cov, simulate_batch, simulate_series

APPENDIX_TOL = 1e-10


class DomainError(click.ClickException):
    exit_code = 1


class ParseError(click.ClickException):
    exit_code = 2


def _load(path):
    try:
        return io.read_model(path)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"cannot read model {path}: {exc}") from exc


def _load_series(path):
    try:
        return io.read_series(path)
    except (OSError, ValueError) as exc:
        raise ParseError(f"cannot read series {path}: {exc}") from exc


def _generator(spec, kind):
    if kind == "gaussian":
        return ResidualGenerator.gaussian(spec.V, spec.W)
    # two equally weighted components centred on the prior matrices
    return ResidualGenerator.mixture(0.5 * spec.V, 0.5 * spec.W, 1.5 * spec.V, 1.5 * spec.W, q=0.5)


@click.group()
def main():
    """Bayes linear covariance adjustment for constant multivariate DLMs."""


@main.command()
@click.argument("model", type=click.Path())
def validate(model):
    """Check the model and report its transfer matrix H."""
    spec, _, _ = _load(model)
    report = validate_model(spec)
    for v in report.violations:
        click.echo(f"violation: {v}")
    if not report.admissible:
        raise DomainError("model is not admissible")
    try:
        tm = compute_transfer(spec)
    except NoTransferExists as exc:
        raise DomainError(f"not two-step invertible: {exc}") from exc
    click.echo("admissible: yes")
    click.echo(f"H = {json.dumps(np.round(tm.H, 12).tolist())}")
    click.echo(f"H invertible: {tm.invertible} (condition {tm.condition_estimate:.6g})")


@main.command()
@click.argument("model", type=click.Path())
@click.option("--n", "n", type=int, required=True, help="Series length.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--generator", type=click.Choice(["gaussian", "mixture"]), default="gaussian",
              show_default=True)
@click.option("-o", "--output", type=click.Path(), default="-", show_default=True)
def simulate(model, n, seed, generator, output):
    """Simulate a series from the model (CSV: t,x1..xr)."""
    spec, _, _ = _load(model)
    if n < 3:
        raise DomainError("n must be >= 3")
    X = simulate_series(spec, _generator(spec, generator), n, seed)
    if output == "-":
        lines = ["t," + ",".join(f"x{i + 1}" for i in range(spec.r))]
        lines += [",".join([str(t)] + [io.fmt(v) for v in row]) for t, row in enumerate(X, 1)]
        click.echo("\n".join(lines))
    else:
        io.write_series(output, X)


@main.command()
@click.argument("model", type=click.Path())
@click.option("--mode", type=click.Choice(["appendix", "montecarlo"]), default="appendix",
              show_default=True)
@click.option("--n-reps", type=int, default=200_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--generator", type=click.Choice(["gaussian", "mixture"]), default="gaussian",
              show_default=True)
def verify(model, mode, n_reps, seed, generator):
    """Check the moment engine against closed forms or simulation."""
    spec, beliefs, _ = _load(model)
    failures = []
    if mode == "appendix":
        if beliefs is None:
            raise DomainError("model has no fourth_order section")
        for case in Relation:
            try:
                oracle = appendix_covariance(case, beliefs, spec)
            except NotIdentityModel as exc:
                raise DomainError(str(exc)) from exc
            diff = np.abs(engine_covariance(case, beliefs, spec) - oracle)
            ok = diff.max() <= APPENDIX_TOL
            click.echo(f"{'PASS' if ok else 'FAIL'} {case.name:18s} max|diff| = {diff.max():.3e}")
            if not ok:
                idx = np.unravel_index(diff.argmax(), diff.shape)
                failures.append(f"{case.name} entry {idx}")
    else:
        if n_reps < 1000:
            raise DomainError("--n-reps must be at least 1000")
        if not np.allclose(spec.F, np.eye(spec.r)) or not np.allclose(spec.G, np.eye(spec.p)):
            raise DomainError("montecarlo mode runs on the identity model")
        gen = _generator(spec, generator)
        mc_spec = spec.with_covariances(V=gen.mean_V, W=gen.mean_W)
        truth = generator_beliefs(gen)
        t0 = 8
        batch = simulate_batch(mc_spec, gen, t0 + 4, n_reps, seed)
        for case in Relation:
            a, b = relation_operands(case, mc_spec, t=t0, s=3)
            if isinstance(a, str):
                continue
            est, se = monte_carlo_cov(a, b, gen, n_reps, seed, mc_spec, np.eye(spec.r), batch=batch)
            engine = engine_covariance(case, truth, mc_spec, t=t0, s=3)
            z = np.abs(est - engine) / np.where(se > 0, se, np.inf)
            frac = float(np.mean(z > 3))
            ok = z.max() <= 4 and frac <= 0.01
            click.echo(f"{'PASS' if ok else 'FAIL'} {case.name:18s} max|z| = {z.max():.2f} "
                       f"frac>3 = {frac:.4f}")
            if not ok:
                failures.append(f"{case.name} entry {np.unravel_index(z.argmax(), z.shape)}")
    if failures:
        raise DomainError("failed: " + "; ".join(failures))


@main.command()
@click.argument("model", type=click.Path())
@click.argument("data", type=click.Path())
@click.option("--n", "n", type=int, default=None, help="Time points used (default: all rows).")
@click.option("--psd", type=click.Choice(["report", "clip"]), default="report", show_default=True)
@click.option("--prior-only", is_flag=True, help="Constants-only design.")
@click.option("-o", "--output", type=click.Path(), required=True)
def adjust(model, data, n, psd, prior_only, output):
    """Adjust V and F^T W F from a series; writes a JSON result."""
    spec, beliefs, _ = _load(model)
    if beliefs is None:
        raise DomainError("model has no fourth_order section")
    X = _load_series(data)
    if X.size == 0:
        raise DomainError("data is empty")
    if X.shape[1] != spec.r:
        raise DomainError(f"data has {X.shape[1]} columns, model has r={spec.r}")
    n = X.shape[0] if n is None else n
    if not prior_only and (n < 3 or X.shape[0] < n):
        raise DomainError(f"need 3 <= n <= {X.shape[0]}, got {n}")
    est = CovarianceAdjuster(spec, beliefs, n_obs=n, prior_only=prior_only,
                             psd="clip" if psd == "clip" else "report_only")
    try:
        est.fit(X)
    except (LengthMismatch, NoTransferExists, ValueError) as exc:
        raise DomainError(str(exc)) from exc
    doc = est.result_.to_dict()
    doc["n"] = n
    doc["H"] = est.transfer_.H.tolist()
    doc["W"] = est.adjusted_W_.tolist()
    Path(output).write_text(io.dumps(doc))
    for k, v in est.resolution_.items():
        click.echo(f"resolution {k}: {v:.6g}")


def _read_adjusted(path):
    try:
        doc = json.loads(Path(path).read_text())
        return np.asarray(doc["adjusted"]["Vnu"], float), np.asarray(doc["W"], float)
    except FileNotFoundError as exc:
        raise DomainError(f"adjusted file not found: {path}") from exc
    except (ValueError, KeyError) as exc:
        raise ParseError(f"cannot read adjusted file {path}: {exc}") from exc


@main.command()
@click.argument("model", type=click.Path())
@click.argument("data", type=click.Path())
@click.option("--covariances", default="prior", show_default=True,
              help="'prior' or 'adjusted:PATH'.")
@click.option("--compare", type=click.Path(), default=None,
              help="Adjusted JSON; report prior and adjusted summaries side by side.")
@click.option("-o", "--output", type=click.Path(), default=None, help="Diagnostics CSV.")
def forecast(model, data, covariances, compare, output):
    """Run the one-step filter and report size-ratio diagnostics."""
    spec, _, _ = _load(model)
    X = _load_series(data)
    if X.size == 0:
        raise DomainError("data is empty")
    if X.shape[1] != spec.r:
        raise DomainError(f"data has {X.shape[1]} columns, model has r={spec.r}")
    if covariances == "prior":
        V, W = None, None
    elif covariances.startswith("adjusted:"):
        V, W = _read_adjusted(covariances.split(":", 1)[1])
    else:
        raise ParseError(f"bad --covariances value {covariances!r}")
    f = DLMForecaster(spec, V, W).fit(X)
    if output:
        Path(output).write_text(io.diagnostics_csv(f.diagnostics_))
    click.echo(f"size_ratio {covariances.split(':')[0]}: {io.fmt(f.size_ratio_)}")
    if compare:
        Va, Wa = _read_adjusted(compare)
        prior = DLMForecaster(spec).fit(X).size_ratio_
        adj = DLMForecaster(spec, Va, Wa).fit(X).size_ratio_
        click.echo(f"size_ratio prior: {io.fmt(prior)}")
        click.echo(f"size_ratio adjusted: {io.fmt(adj)}")
