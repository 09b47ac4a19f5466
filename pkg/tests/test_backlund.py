import numpy as np
import pytest

from mtmlab.backlund import (
    RiccatiField,
    backlund_transform,
    down_map,
    pushforward_eigenvector,
    riccati_residual,
    up_map,
)
from mtmlab.errors import DegenerateVectorError, ParameterError
from mtmlab.fields import LaxVector, SpinorField, combined_l2_distance, l2_norm, l2_norm_sq
from mtmlab.lax import (
    assemble_L,
    collinearity_defect,
    find_eigenvalue,
    solve_time_bvp,
    spatial_residual,
)
from mtmlab.evolution import ChargeMonitor, EvolutionConfig, evolve
from mtmlab.solitons import (
    SpectralParameter,
    csech,
    free_lax_vector,
    soliton_eigenvector,
    soliton_field,
    stationary_soliton,
)

LAM0 = np.exp(0.25j * np.pi)


@pytest.fixture(scope="module")
def perturbed(grid):
    sol = stationary_soliton(np.pi / 2, 0.0, 0.0, 0.0, grid)
    bump = np.exp(-(grid.x - 1.0) ** 2 / 4) * np.exp(0.3j * grid.x)
    bump /= 2 * np.sqrt(np.trapezoid(np.abs(bump) ** 2, grid.x))

    def make(eps):
        return SpinorField(grid, sol.u + eps * bump, sol.v + eps * bump)

    return make


@pytest.mark.parametrize("gamma", [np.pi / 8, np.pi / 2, 3 * np.pi / 4])
@pytest.mark.parametrize("delta", [1.0, 2.0])
def test_zero_to_soliton(grid, gamma, delta):
    p = SpectralParameter.from_polar(gamma, delta)
    phi = free_lax_vector(p, 0.3, grid)
    out = backlund_transform(SpinorField.zero(grid), phi, p.lam)
    ref = soliton_field(p, 0.3, grid)
    assert np.abs(out.u - ref.u).max() < 1e-10
    assert np.abs(out.v - ref.v).max() < 1e-10


def test_soliton_to_zero(grid):
    sol = stationary_soliton(np.pi / 2, 0.0, 0.0, 0.0, grid)
    psi = soliton_eigenvector(np.pi / 2, 0.0, grid)
    out = backlund_transform(sol, psi, LAM0)
    assert l2_norm(out) < 1e-6


def test_prefactor_unit_modulus_when_cross_term_vanishes(grid):
    # phi = (1, 0): the cross term is zero, so |output| = |input| pointwise
    sol = stationary_soliton(np.pi / 3, 0.0, 0.0, 0.0, grid)
    phi = LaxVector(grid, np.ones(grid.n), np.zeros(grid.n))
    out = backlund_transform(sol, phi, np.exp(np.pi / 6 * 1j))
    assert np.abs(np.abs(out.u) - np.abs(sol.u)).max() < 1e-12
    assert np.abs(np.abs(out.v) - np.abs(sol.v)).max() < 1e-12


def test_backlund_charge_of_created_soliton(grid):
    for gamma in (np.pi / 4, np.pi / 2):
        p = SpectralParameter.from_polar(gamma)
        out = backlund_transform(SpinorField.zero(grid), free_lax_vector(p, 0.0, grid), p.lam)
        assert l2_norm_sq(out) == pytest.approx(4 * gamma, abs=1e-6)


def test_backlund_rejects_bad_parameters(grid):
    zero_vec = LaxVector(grid, np.zeros(grid.n), np.zeros(grid.n))
    with pytest.raises(DegenerateVectorError):
        backlund_transform(SpinorField.zero(grid), zero_vec, LAM0)
    phi = free_lax_vector(SpectralParameter.from_polar(np.pi / 2), 0.0, grid)
    with pytest.raises(ParameterError):
        backlund_transform(SpinorField.zero(grid), phi, -1.0 + 0j)   # gamma = 2 pi


def test_pushforward_pointwise(grid):
    phi = LaxVector(grid, np.ones(grid.n), np.ones(grid.n))
    psi = pushforward_eigenvector(phi, np.pi / 2)
    assert np.abs(psi.phi1 - 1 / np.sqrt(2)).max() < 1e-13
    assert np.abs(psi.phi2 - 1 / np.sqrt(2)).max() < 1e-13


def test_pushforward_of_free_vector_is_soliton_eigenvector(grid):
    p = SpectralParameter.from_polar(np.pi / 2)
    psi = pushforward_eigenvector(free_lax_vector(p, 0.0, grid), p.gamma)
    ref = soliton_eigenvector(np.pi / 2, 0.0, grid)
    assert collinearity_defect(psi, ref) < 1e-8


def test_pushforward_solves_transformed_system(grid):
    p = SpectralParameter.from_polar(np.pi / 2)
    phi = free_lax_vector(p, 0.0, grid)
    out = backlund_transform(SpinorField.zero(grid), phi, p.lam)
    psi = pushforward_eigenvector(phi, p.gamma)
    assert spatial_residual(assemble_L(out, p.lam), psi) < 1e-4


def test_pushforward_norm_identity(grid, rng):
    env = np.exp(-grid.x ** 2 / 50) + 0.2
    phi = LaxVector(grid, env * (rng.normal(size=grid.n) + 1j * rng.normal(size=grid.n)),
                    env * (rng.normal(size=grid.n) - 1j * rng.normal(size=grid.n)))
    gamma = np.pi / 3
    psi = pushforward_eigenvector(phi, gamma)
    d = np.abs(np.exp(0.5j * gamma) * np.abs(phi.phi1) ** 2
               + np.exp(-0.5j * gamma) * np.abs(phi.phi2) ** 2)
    lhs = np.abs(psi.phi1) ** 2 + np.abs(psi.phi2) ** 2
    rhs = (np.abs(phi.phi1) ** 2 + np.abs(phi.phi2) ** 2) / d ** 2
    assert np.abs(lhs - rhs).max() < 1e-12


# -- Riccati checks ------------------------------------------------------------

def test_riccati_exact_free_solution(grid):
    p = SpectralParameter.from_polar(np.pi / 2)
    ric = RiccatiField.from_lax_vector(free_lax_vector(p, 0.0, grid))
    assert ric.invalid_count == 0
    assert riccati_residual(ric, SpinorField.zero(grid), p.lam) < 1e-6


def test_riccati_invariance_under_backlund(grid):
    p = SpectralParameter.from_polar(np.pi / 2)
    phi = free_lax_vector(p, 0.0, grid)
    out = backlund_transform(SpinorField.zero(grid), phi, p.lam)
    ric = RiccatiField.from_lax_vector(phi).reciprocal_conjugate()
    assert riccati_residual(ric, out, p.lam) < 1e-4


def test_riccati_rejects_random_data(grid, rng):
    sol = stationary_soliton(np.pi / 2, 0.0, 0.0, 0.0, grid)
    ric = RiccatiField(grid, rng.normal(size=grid.n) + 1j * rng.normal(size=grid.n),
                       np.ones(grid.n, bool))
    assert riccati_residual(ric, sol, LAM0) > 0.1


def test_riccati_invalid_samples_are_counted(grid):
    phi1 = np.ones(grid.n, complex)
    phi2 = np.ones(grid.n, complex)
    phi2[5] = 0.0
    ric = RiccatiField.from_lax_vector(LaxVector(grid, phi1, phi2))
    assert ric.invalid_count == 1


# -- down map -------------------------------------------------------------------

def test_down_map_exact_soliton(grid):
    sol = stationary_soliton(np.pi / 2, 0.0, 0.0, 0.0, grid)
    res = find_eigenvalue(sol, LAM0)
    assert l2_norm(down_map(sol, res)) < 1e-6


def test_down_map_smallness_slope(grid, perturbed):
    norms = []
    for eps in (1e-3, 1e-2, 1e-1):
        f = perturbed(eps)
        res = find_eigenvalue(f, LAM0)
        norms.append(l2_norm(down_map(f, res)))
    slope = np.polyfit(np.log([1e-3, 1e-2, 1e-1]), np.log(norms), 1)[0]
    assert 0.8 <= slope <= 1.2


def test_down_map_output_charge_conserved_under_evolution(grid, perturbed):
    f = perturbed(1e-2)
    res = find_eigenvalue(f, LAM0)
    pq0 = down_map(f, res)
    mon = ChargeMonitor(pq0)
    evolve(pq0, EvolutionConfig(dt=grid.dx, t_end=5.0, output_stride=32),
           observer=lambda t, g: mon.drift(g))
    assert mon.max_drift < 1e-6


# -- up map ---------------------------------------------------------------------

def test_up_map_reconstructs_translated_soliton(grid):
    zero = SpinorField.zero(grid)
    s = np.sin(np.pi / 2)
    for a, theta, t in ((0.0, 0.0, 0.0), (1.0, np.pi / 3, 0.0), (-0.6, 2.0, 1.5)):
        jost = solve_time_bvp(zero, LAM0, t)
        rec = up_map(zero, jost, LAM0, a, theta)
        phase = 1j * np.exp(-1j * theta - 1j * t * np.cos(np.pi / 2))
        uref = phase * s * csech(grid.x * s - 0.5j * np.pi / 2 - a)
        vref = -phase * s * csech(grid.x * s + 0.5j * np.pi / 2 - a)
        assert np.abs(rec.u - uref).max() < 1e-10
        assert np.abs(rec.v - vref).max() < 1e-10


def test_round_trip_recovers_input(grid, perturbed):
    # down then up with optimally fitted (a, theta) returns to the input
    f0 = perturbed(1e-2)
    res = find_eigenvalue(f0, LAM0)
    pq0 = down_map(f0, res)
    small = l2_norm(pq0)
    jost = solve_time_bvp(pq0, res.lam, 0.0)
    from mtmlab.stability import _fit_reconstruction
    dist, a_fit, th_fit = _fit_reconstruction(pq0, jost, res.lam, f0, (0.0, 0.0), True)
    assert dist <= 2 * small
    rec = up_map(pq0, jost, res.lam, a_fit, th_fit)
    assert combined_l2_distance(rec, f0) <= 2 * small
