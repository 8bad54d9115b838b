import numpy as np
import pytest

from nematoflow.material import (FreeEnergy, MaterialError, MaterialModel,
                                 ParameterSet, ThermoState)
from nematoflow.sampling import make_rng
from nematoflow import stress


def make_params(n_dim=2, **overrides):
    base = dict(mu_s=1.0, mu_b=0.3, mu_V=0.7, mu_D=0.4, mu_P=0.6, mu_L=0.5,
                mu_0=0.8, alpha_0=1.0, alpha_1=-0.4, gamma=1.2, rho=1.0)
    base.update(overrides)
    return ParameterSet.from_constants(n_dim=n_dim, **base)


def random_unit(rng, n):
    d = rng.standard_normal(n)
    return d / np.linalg.norm(d)


def random_kinematics(rng, n, batch=()):
    """Admissible batch: unit d, tangent grad_d, tangent Dt_d."""
    d = rng.standard_normal(batch + (n,))
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    P = stress.tangent_projector(d)
    grad_u = rng.standard_normal(batch + (n, n))
    grad_d = np.einsum("...ij,...jk->...ik", rng.standard_normal(batch + (n, n)), P)
    Dt_d = np.einsum("...ij,...j->...i", P, rng.standard_normal(batch + (n,)))
    grad_theta = rng.standard_normal(batch + (n,))
    theta = rng.uniform(0.5, 3.0, size=batch)
    return d, grad_u, grad_d, Dt_d, grad_theta, theta


class TestDecompose:
    def test_shear_example(self):
        D, V = stress.decompose_gradient(np.array([[0.0, 1.0], [0.0, 0.0]]))
        assert np.array_equal(D, [[0.0, 0.5], [0.5, 0.0]])
        assert np.array_equal(V, [[0.0, 0.5], [-0.5, 0.0]])

    def test_symmetric_input(self):
        G = np.array([[1.0, 2.0], [2.0, -1.0]])
        _, V = stress.decompose_gradient(G)
        assert np.all(V == 0.0)

    def test_reconstruction(self):
        rng = make_rng(1)
        G = rng.standard_normal((50, 3, 3))
        D, V = stress.decompose_gradient(G)
        assert np.max(np.abs(D + V - G)) <= 1e-14
        assert np.max(np.abs(D - np.swapaxes(D, -1, -2))) == 0.0


class TestNewton:
    def test_zero(self):
        p = make_params()
        s = ThermoState(1.0, 0.0)
        assert np.all(stress.newton_stress(p, s, np.zeros((2, 2)), 0.0) == 0.0)

    def test_pure_shear(self):
        p = make_params(mu_s=1.0, mu_b=0.0)
        D = np.array([[0.0, 0.5], [0.5, 0.0]])
        S = stress.newton_stress(p, ThermoState(1.0, 0.0), D, 0.0)
        assert np.allclose(S, [[0.0, 1.0], [1.0, 0.0]])

    def test_contraction_nonnegative(self):
        rng = make_rng(2)
        p = make_params(n_dim=3, mu_s=1.0, mu_b=0.2)
        for _ in range(100):
            G = rng.standard_normal((3, 3))
            D, _ = stress.decompose_gradient(G)
            div_u = np.trace(G)
            S = stress.newton_stress(p, ThermoState(1.0, 0.0), D, div_u)
            work = float(np.sum(S * G))
            oracle = 2.0 * np.sum(D * D) + 0.2 * div_u ** 2
            assert work == pytest.approx(oracle, rel=1e-12)
            assert work >= 0.0


class TestEricksen:
    def test_zero_gradient(self):
        assert np.all(stress.ericksen_stress(2.0, 1.0, np.zeros((2, 2))) == 0.0)

    def test_rank_one(self):
        g = np.zeros((2, 2))
        g[0, 0] = 1.0          # grad_d = e1 (x) e1
        S = stress.ericksen_stress(2.0, 1.0, g)
        assert np.allclose(S, [[-2.0, 0.0], [0.0, 0.0]])

    def test_negative_semidefinite(self):
        rng = make_rng(3)
        for _ in range(50):
            g = rng.standard_normal((3, 3))
            S = stress.ericksen_stress(0.7, 1.3, g)
            eigs = np.linalg.eigvalsh(S)
            assert np.all(eigs <= 1e-12)


class TestElasticForce:
    def test_constant_director(self):
        d = np.array([1.0, 0.0])
        a = stress.a_vector(0.5, np.zeros((2, 2)), np.zeros(2), d)
        assert np.all(a == 0.0)

    def test_circle_solution(self):
        # d = (cos x, sin x): div(lam grad)d = -lam d and lam |grad d|^2 d = lam d
        lam = 0.7
        for x in (0.0, 0.4, 1.1):
            d = np.array([np.cos(x), np.sin(x)])
            grad_d = np.zeros((2, 2))
            grad_d[0, :] = [-np.sin(x), np.cos(x)]
            a = stress.a_vector(lam, grad_d, -lam * d, d)
            assert np.max(np.abs(a)) <= 1e-15

    def test_tangency_second_order_under_refinement(self):
        # discrete laplacian of an analytic unit field: a . d = O(dx^2)
        from nematoflow.grid import Grid, face_coefficients, div_coef_grad_vec, grad_center_vec
        defects = []
        for n in (32, 64):
            g = Grid(Lx=2.0, Ly=2.0 * 3 / n, Nx=n, Ny=3)
            x = g.xc()
            angle = 0.7 * np.cos(np.pi * x / g.Lx) + 0.0 * g.yc()
            d = np.stack([np.cos(angle), np.sin(angle)], axis=-1)
            lam = np.ones(g.shape)
            cfx, cfy = face_coefficients(lam)
            lap = div_coef_grad_vec(g, d, cfx, cfy)
            a = stress.a_vector(1.0, grad_center_vec(g, d), lap, d)
            defects.append(np.max(np.abs(np.einsum("xyk,xyk->xy", a, d))))
        assert defects[0] / defects[1] == pytest.approx(4.0, rel=0.25)


class TestRateVector:
    def test_balanced_rate_gives_zero(self):
        rng = make_rng(4)
        p = make_params()
        s = ThermoState(1.0, 0.3)
        d = random_unit(rng, 2)
        G = rng.standard_normal((2, 2))
        D, V = stress.decompose_gradient(G)
        P = stress.tangent_projector(d)
        Dt_d = (0.7 * V @ d + 0.4 * P @ (D @ d)) / 1.2
        n_vec = stress.n_vector(p, s, V, D, d, Dt_d)
        assert np.max(np.abs(n_vec)) <= 1e-14

    def test_orthogonality(self):
        rng = make_rng(5)
        p = make_params(n_dim=3)
        s = ThermoState(1.2, 0.5)
        d, grad_u, _, Dt_d, _, _ = random_kinematics(rng, 3, (200,))
        D, V = stress.decompose_gradient(grad_u)
        n_vec = stress.n_vector(p, s, V, D, d, Dt_d)
        dots = np.abs(np.einsum("bi,bi->b", n_vec, d))
        norms = np.linalg.norm(n_vec, axis=-1)
        assert np.all(dots <= 1e-12 * np.maximum(norms, 1e-300))


class TestStretch:
    def test_unit_coefficients(self):
        p = make_params(mu_D=1.0, mu_V=1.0, gamma=1.0)
        s = ThermoState(1.0, 0.0)
        d = np.array([0.0, 1.0])
        n_vec = np.array([0.3, 0.0])
        S = stress.stretch_stress(p, s, n_vec, d)
        assert np.allclose(S, np.outer(n_vec, d))

    def test_pure_vorticity_antisymmetric_part(self):
        p = make_params(mu_D=0.0, mu_V=1.2, gamma=1.2)
        s = ThermoState(1.0, 0.0)
        d = np.array([1.0, 0.0])
        n_vec = np.array([0.0, 0.4])
        S = stress.stretch_stress(p, s, n_vec, d)
        expected = 0.5 * (np.outer(n_vec, d) - np.outer(d, n_vec))
        assert np.allclose(S, expected, atol=1e-15)

    def test_zero_rate(self):
        p = make_params()
        S = stress.stretch_stress(p, ThermoState(1.0, 0.0), np.zeros(2),
                                  np.array([1.0, 0.0]))
        assert np.all(S == 0.0)


class TestDissipativeStress:
    def test_zero_inputs(self):
        p = make_params()
        d = np.array([1.0, 0.0])
        S = stress.dissipative_stress(p, ThermoState(1.0, 0.0), np.zeros(2), d,
                                      np.zeros((2, 2)))
        assert np.all(S == 0.0)

    def test_axial_compression(self):
        p = make_params(mu_P=0.0, mu_L=0.0, mu_0=1.0)
        d = np.array([1.0, 0.0])
        D = np.zeros((2, 2))
        D[0, 0] = 1.0
        S = stress.dissipative_stress(p, ThermoState(1.0, 0.0), np.zeros(2), d, D)
        assert np.allclose(S, D)

    def test_symmetry(self):
        rng = make_rng(6)
        p = make_params(n_dim=3)
        s = ThermoState(0.9, 0.7)
        d, grad_u, _, Dt_d, _, _ = random_kinematics(rng, 3, (100,))
        D, V = stress.decompose_gradient(grad_u)
        n_vec = stress.n_vector(p, s, V, D, d, Dt_d)
        S = stress.dissipative_stress(p, s, n_vec, d, D)
        assert np.max(np.abs(S - np.swapaxes(S, -1, -2))) == 0.0


class TestContractionIdentity:
    def test_zero_kinematics(self):
        p = make_params()
        d = np.array([1.0, 0.0])
        lhs, rhs = stress.diss_entropy_identity(p, ThermoState(1.0, 0.0),
                                                np.zeros(2), d, np.zeros((2, 2)),
                                                np.zeros((2, 2)))
        assert lhs == 0.0 and rhs == 0.0

    def test_no_rate_coupling_reduction(self):
        rng = make_rng(7)
        p = make_params(mu_P=0.0, mu_L=0.5, mu_0=0.8)
        s = ThermoState(1.1, 0.2)
        d, grad_u, _, Dt_d, _, _ = random_kinematics(rng, 2, (50,))
        D, V = stress.decompose_gradient(grad_u)
        n_vec = stress.n_vector(p, s, V, D, d, Dt_d)
        lhs, rhs = stress.diss_entropy_identity(p, s, n_vec, d, D, grad_u)
        Dd = np.einsum("bij,bj->bi", D, d)
        Dd_d = np.einsum("bi,bi->b", Dd, d)
        PdDd = Dd - Dd_d[:, None] * d
        oracle = 0.5 * np.einsum("bi,bi->b", PdDd, PdDd) + 0.8 * Dd_d ** 2
        assert np.allclose(rhs, oracle, rtol=1e-13)
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-14)

    @pytest.mark.parametrize("n", [2, 3])
    def test_random_admissible(self, n):
        rng = make_rng(8)
        p = make_params(n_dim=n)
        d, grad_u, _, Dt_d, _, theta = random_kinematics(rng, n, (1000,))
        s = ThermoState(theta, 0.4)
        D, V = stress.decompose_gradient(grad_u)
        n_vec = stress.n_vector(p, s, V, D, d, Dt_d)
        lhs, rhs = stress.diss_entropy_identity(p, s, n_vec, d, D, grad_u)
        scale = np.maximum(np.abs(lhs), np.abs(rhs)) + 1e-300
        assert np.max(np.abs(lhs - rhs) / scale) <= 1e-12


class TestHeatFlux:
    def test_aligned(self):
        p = make_params(alpha_0=1.0, alpha_1=1.0)
        q = stress.heat_flux(p, ThermoState(1.0, 0.0), np.array([1.0, 0.0]),
                             np.array([1.0, 0.0]))
        assert np.allclose(q, [-2.0, 0.0])

    def test_orthogonal(self):
        p = make_params(alpha_0=0.9, alpha_1=0.5)
        q = stress.heat_flux(p, ThermoState(1.0, 0.0), np.array([0.0, 2.0]),
                             np.array([1.0, 0.0]))
        assert np.allclose(q, [0.0, -1.8])

    def test_quadratic_form(self):
        rng = make_rng(9)
        p = make_params(alpha_0=1.0, alpha_1=-0.4)
        s = ThermoState(1.0, 0.0)
        for _ in range(200):
            d = random_unit(rng, 3)
            gt = rng.standard_normal(3)
            q = stress.heat_flux(make_params(n_dim=3, alpha_0=1.0, alpha_1=-0.4), s, gt, d)
            val = -float(q @ gt)
            oracle = 1.0 * gt @ gt - 0.4 * float(d @ gt) ** 2
            assert val == pytest.approx(oracle, rel=1e-12)
            assert val >= 0.0


class TestEntropyProduction:
    def test_equilibrium_point(self):
        p = make_params()
        d = np.array([1.0, 0.0])
        r = stress.entropy_production(p, ThermoState(1.5, 0.0),
                                      np.zeros((2, 2)), 0.0, np.zeros(2), d,
                                      np.zeros(2))
        assert r == 0.0

    def test_conduction_only(self):
        p = make_params(alpha_0=1.0, alpha_1=-0.4)
        theta = 1.7
        d = np.array([0.0, 1.0])
        gt = np.array([0.3, -0.2])
        r = stress.entropy_production(p, ThermoState(theta, 0.0),
                                      np.zeros((2, 2)), 0.0, gt, d, np.zeros(2))
        oracle = (1.0 * gt @ gt - 0.4 * float(d @ gt) ** 2) / theta ** 2
        assert r == pytest.approx(oracle, rel=1e-14)

    def test_completing_the_square_oracle(self):
        # with n = -a, the rate-coupling terms regroup into
        # (|a|^2 + 2 mu_P (n | PdDd) + mu_P^2 |PdDd|^2)/gamma
        rng = make_rng(10)
        p = make_params(mu_P=0.6, mu_L=0.5, mu_0=0.8, gamma=1.2)
        theta = 1.3
        s = ThermoState(theta, 0.5)
        d, grad_u, _, _, gt, _ = random_kinematics(rng, 2, (500,))
        D, V = stress.decompose_gradient(grad_u)
        div_u = np.einsum("bii->b", grad_u)
        # tangential elastic force supplied directly (lap chosen tangent)
        P = stress.tangent_projector(d)
        a_vec = np.einsum("bij,bj->bi", P, rng.standard_normal((500, 2)))
        r = stress.entropy_production(p, s, D, div_u, gt, d, a_vec)

        Dd = np.einsum("bij,bj->bi", D, d)
        Dd_d = np.einsum("bi,bi->b", Dd, d)
        PdDd = Dd - Dd_d[:, None] * d
        n_vec = -a_vec
        heat = (1.0 * np.einsum("bi,bi->b", gt, gt)
                - 0.4 * np.einsum("bi,bi->b", d, gt) ** 2) / theta
        couple = (np.einsum("bi,bi->b", a_vec, a_vec)
                  + 2 * 0.6 * np.einsum("bi,bi->b", n_vec, -PdDd) * (-1.0)
                  + 0.6 ** 2 * np.einsum("bi,bi->b", PdDd, PdDd)) / 1.2
        oracle = (heat + 2 * 1.0 * np.einsum("bij,bij->b", D, D)
                  + 0.3 * div_u ** 2 + couple
                  + 0.5 * np.einsum("bi,bi->b", PdDd, PdDd)
                  + 0.8 * Dd_d ** 2) / theta
        scale = np.maximum(np.abs(r), np.abs(oracle))
        assert np.max(np.abs(r - oracle) / scale) <= 1e-12


class TestAvailableDissipation:
    def test_zero(self):
        p = make_params()
        d = np.array([1.0, 0.0])
        assert stress.available_dissipation(p, ThermoState(1.0, 0.0),
                                            np.zeros((2, 2)), 0.0, d,
                                            np.zeros(2)) == 0.0

    def test_matches_theta_r_without_conduction(self):
        rng = make_rng(11)
        p = make_params()
        theta = 1.9
        s = ThermoState(theta, 0.4)
        d, grad_u, _, _, _, _ = random_kinematics(rng, 2, (200,))
        D, _ = stress.decompose_gradient(grad_u)
        div_u = np.einsum("bii->b", grad_u)
        lap = rng.standard_normal((200, 2))
        r = stress.entropy_production(p, s, D, div_u, np.zeros((200, 2)), d, lap)
        r_a = stress.available_dissipation(p, s, D, div_u, d, lap)
        assert np.allclose(theta * r, r_a, rtol=1e-13)

    def test_nonnegative(self):
        rng = make_rng(12)
        p = make_params(n_dim=3)
        d, grad_u, _, _, _, theta = random_kinematics(rng, 3, (1000,))
        D, _ = stress.decompose_gradient(grad_u)
        div_u = np.einsum("bii->b", grad_u)
        lap = rng.standard_normal((1000, 3))
        r_a = stress.available_dissipation(p, ThermoState(theta, 0.2), D, div_u, d, lap)
        assert np.all(r_a >= 0.0)


def test_leslie_collapse_to_newton_ericksen(ideal_material):
    """With all Leslie coefficients zero the stress is S_N + S_E and the
    production reduces to conduction + Newton + |a|^2/gamma."""
    rng = make_rng(13)
    p = make_params(mu_V=0.0, mu_D=0.0, mu_P=0.0, mu_L=0.0, mu_0=0.0,
                    mu_s=1.0, mu_b=0.3, gamma=1.2, alpha_0=1.0, alpha_1=-0.4)
    mat = MaterialModel(FreeEnergy.ideal_linear(a=2.0, k=0.5), p)
    theta = 1.4
    x = 0.8
    d = np.array([np.cos(x), np.sin(x)])
    grad_d = np.zeros((2, 2))
    grad_d[0, :] = [-np.sin(x), np.cos(x)]
    lam = float(mat.lam(theta, 0.5))
    lap = -lam * d                                 # analytic div(lam grad) d
    G = rng.standard_normal((2, 2))
    D, V = stress.decompose_gradient(G)
    Dt_d = stress.tangent_projector(d) @ rng.standard_normal(2)
    kin = stress.KinematicPoint.make(G, d, grad_d, Dt_d, theta,
                                     rng.standard_normal(2))
    bundle = stress.assemble_bundle(mat, kin, lap)
    assert np.all(bundle.S_stretch == 0.0)
    assert np.all(bundle.S_diss == 0.0)
    assert np.allclose(bundle.total_stress, bundle.S_N + bundle.S_E)
    # a = P_d lap for this field, so r theta = heat/theta + newton + |a|^2/gamma
    s = ThermoState(theta, kin.tau)
    q = bundle.q
    heat = -float(q @ kin.grad_theta)
    div_u = np.trace(G)
    newton = 2.0 * np.sum(D * D) + 0.3 * div_u ** 2
    a = bundle.a_vec
    oracle = (heat / theta + newton + float(a @ a) / 1.2) / theta
    assert bundle.r == pytest.approx(oracle, rel=1e-12)


def test_bundle_invariants(coupled_material):
    rng = make_rng(14)
    d, grad_u, grad_d, Dt_d, gt, theta = random_kinematics(rng, 2, (300,))
    kin = stress.KinematicPoint.make(grad_u, d, grad_d, Dt_d, theta, gt)
    lap = rng.standard_normal((300, 2))
    bundle = stress.assemble_bundle(coupled_material, kin, lap)
    assert np.max(np.abs(bundle.D + bundle.V - grad_u)) <= 1e-14
    assert np.max(np.abs(bundle.S_diss - np.swapaxes(bundle.S_diss, -1, -2))) == 0.0
    assert np.all(np.isfinite(bundle.r))


def test_unit_director_is_enforced():
    p = make_params()
    bad = np.array([1.0, 0.5])
    with pytest.raises(MaterialError):
        stress.heat_flux(p, ThermoState(1.0, 0.0), np.zeros(2), bad)
    with pytest.raises(MaterialError):
        stress.n_vector(p, ThermoState(1.0, 0.0), np.zeros((2, 2)),
                        np.zeros((2, 2)), bad, np.zeros(2))
