"""Globally adaptive Gauss-Kronrod quadrature for vector-valued integrands.

All pricing and sensitivity formulas in this package reduce to integrals of
smooth, oscillatory-but-decaying functions on a truncated half-line
[0, u_max].  The pricer integrates several such integrands at once (price
plus partial derivatives share all their expensive intermediates), so the
integrand signature is vector-valued: f(u) maps an array of n abscissae to
an (n, k) array of components.

The driver keeps an explicit panel list and refines all failing panels per
sweep, which keeps the work in large vectorized integrand calls.  The panel
list of a converged run can be frozen and re-used (``eval_on_panels``) so
that finite-difference probes of near-identical integrands see exactly the
same discretisation - this removes adaptive-layout noise from FD oracles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IntegrationError

# 15-point Kronrod rule with embedded 7-point Gauss rule (QUADPACK values).
_XK = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,
    0.207784955007898, 0.405845151377397, 0.586087235467691,
    0.741531185599394, 0.864864423359769, 0.949107912342759,
    0.991455371120813,
])
_WK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979,
    0.022935322010529,
])
# Gauss-7 weights sit on Kronrod nodes 1, 3, 5, 7, 9, 11, 13.
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469,
    0.381830050505119, 0.279705391489277, 0.129484966168870,
])
_GAUSS_IDX = np.arange(1, 15, 2)


@dataclass
class QuadResult:
    """Converged integral with its panel decomposition."""

    value: np.ndarray        # (k,) component integrals
    error: np.ndarray        # (k,) summed local error estimates
    panels: np.ndarray       # (p, 2) panel edges, sorted by left edge
    panel_values: np.ndarray  # (p, k) per-panel contributions
    neval: int

    def tail_contribution(self, lo: float) -> np.ndarray:
        """Absolute contribution of panels lying entirely right of ``lo``."""
        mask = self.panels[:, 0] >= lo
        if not mask.any():
            return np.zeros_like(self.value)
        return np.abs(self.panel_values[mask].sum(axis=0))


def _gk_panels(f, lo, hi):
    """Apply the GK15 rule to each panel; returns (values, errors, neval)."""
    c = 0.5 * (lo + hi)
    h = 0.5 * (hi - lo)
    nodes = c[:, None] + h[:, None] * _XK[None, :]
    fv = np.asarray(f(nodes.ravel()), dtype=float)
    if fv.ndim == 1:
        fv = fv[:, None]
    fv = fv.reshape(len(lo), 15, -1)
    ik = h[:, None] * np.einsum("j,pjk->pk", _WK, fv)
    ig = h[:, None] * np.einsum("j,pjk->pk", _WG, fv[:, _GAUSS_IDX, :])
    return ik, np.abs(ik - ig), nodes.size


def integrate(f, a: float, b: float, abs_tol: float = 1e-10,
              rel_tol: float = 1e-8, max_panels: int = 20000,
              init_width: float = 8.0) -> QuadResult:
    """Integrate the vector integrand f over [a, b].

    Converges when every component's summed error estimate is below
    max(abs_tol, rel_tol * |integral|).  Each panel gets an error budget
    proportional to its width, so the converged panel list is locally
    adequate everywhere; refinement bisects all failing panels per sweep.
    """
    if b <= a:
        raise ValueError(f"empty integration range [{a}, {b}]")
    n0 = int(np.clip(np.ceil((b - a) / init_width), 16, 1024))
    edges = np.linspace(a, b, n0 + 1)
    lo, hi = edges[:-1], edges[1:]
    vals, errs, neval = _gk_panels(f, lo, hi)
    span = b - a
    min_width = 1e-12 * span

    for _ in range(200):
        total = vals.sum(axis=0)
        scale = np.maximum(abs_tol, rel_tol * np.abs(total))
        budget = scale[None, :] * ((hi - lo) / span)[:, None]
        bad = (errs > budget).any(axis=1) & ((hi - lo) > min_width)
        if not bad.any():
            order = np.argsort(lo)
            return QuadResult(
                value=total,
                error=errs.sum(axis=0),
                panels=np.column_stack([lo, hi])[order],
                panel_values=vals[order],
                neval=neval,
            )
        if len(lo) + bad.sum() > max_panels:
            residual = float(errs.sum(axis=0).max())
            raise IntegrationError(
                f"quadrature did not converge with {len(lo)} panels on "
                f"[{a}, {b}]; achieved residual {residual:.3e}",
                residual=residual,
            )
        mid = 0.5 * (lo[bad] + hi[bad])
        new_lo = np.concatenate([lo[bad], mid])
        new_hi = np.concatenate([mid, hi[bad]])
        new_vals, new_errs, n = _gk_panels(f, new_lo, new_hi)
        neval += n
        lo = np.concatenate([lo[~bad], new_lo])
        hi = np.concatenate([hi[~bad], new_hi])
        vals = np.concatenate([vals[~bad], new_vals])
        errs = np.concatenate([errs[~bad], new_errs])

    residual = float(errs.sum(axis=0).max())
    raise IntegrationError(
        f"quadrature refinement loop exhausted on [{a}, {b}]; "
        f"achieved residual {residual:.3e}",
        residual=residual,
    )


def eval_on_panels(f, panels: np.ndarray) -> np.ndarray:
    """Integrate f using a frozen panel list from a previous run."""
    vals, _, _ = _gk_panels(f, panels[:, 0], panels[:, 1])
    return vals.sum(axis=0)
