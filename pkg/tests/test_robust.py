import numpy as np
import pytest

from conftest import (random_nominal_plant, random_robust_plant,
                      random_value_set)
from dualiter import hinf, matops, robust, sdp
from dualiter.plant import (Controller, LfrPlant, close_loop,
                            frozen_delta_close, hinf_norm)
from dualiter.robust import (RobustStepResult, ValueSet, make_multiplier_set,
                             multiplier_margin)

EMPTY = make_multiplier_set(ValueSet.empty())


def transpose_plant(lp):
    """LFR dualization: transposes every block and swaps channel roles."""
    return LfrPlant(
        A=lp.A.T, B1=lp.C1.T, B2=lp.C2.T, B3=lp.C3.T,
        C1=lp.B1.T, C2=lp.B2.T, C3=lp.B3.T,
        D11=lp.D11.T, D12=lp.D21.T, D13=lp.D31.T,
        D21=lp.D12.T, D22=lp.D22.T, D23=lp.D32.T,
        D31=lp.D13.T, D32=lp.D23.T,
        p=lp.dims["q"], q=lp.dims["p"])


def assert_frozen_sound(plant, vset, controller, gamma, rng, count=20):
    closed = close_loop(plant, controller)
    for Delta in vset.vertices() + vset.sample(rng, count):
        assert hinf_norm(frozen_delta_close(closed, Delta)) <= gamma * (1 + 1e-3)


def scale_of(P):
    return float(np.linalg.norm(P, 2)) if P.size else 1.0


class TestValueSet:
    def test_polytope_validation(self):
        with pytest.raises(ValueError, match="at least one generator"):
            ValueSet(kind="polytope")
        with pytest.raises(ValueError, match="share one shape"):
            ValueSet.polytope([np.zeros((1, 1)), np.zeros((2, 1))])
        with pytest.raises(ValueError, match="unknown value set kind"):
            ValueSet(kind="ball")

    def test_interval_validation(self):
        with pytest.raises(ValueError, match="lo < hi"):
            ValueSet.repeated_interval([(1, 1.0, -1.0)])
        with pytest.raises(ValueError, match="positive integer"):
            ValueSet.repeated_interval([(0, -1.0, 1.0)])
        with pytest.raises(ValueError, match="at least one block"):
            ValueSet(kind="repeated_interval")

    def test_dims_and_vertices(self):
        vs = ValueSet.repeated_interval([(1, -0.5, 0.5), (2, 0.0, 1.0)])
        assert (vs.p, vs.q) == (3, 3)
        verts = vs.vertices()
        assert len(verts) == 4
        # every vertex is blockdiagonal with the interval endpoints repeated
        for V in verts:
            assert V[0, 0] in (-0.5, 0.5)
            assert V[1, 1] == V[2, 2] and V[1, 1] in (0.0, 1.0)
            assert V[1, 2] == 0.0

        pv = ValueSet.polytope([np.ones((2, 3))])
        assert (pv.p, pv.q) == (3, 2)
        assert ValueSet.empty().p == 0 and ValueSet.empty().q == 0

    def test_samples_stay_in_the_set(self):
        rng = np.random.default_rng(0)
        vs = ValueSet.repeated_interval([(2, -0.3, 0.8)])
        for S in vs.sample(rng, 25):
            assert -0.3 <= S[0, 0] <= 0.8
            assert S[0, 0] == S[1, 1] and S[0, 1] == 0.0
        pv = ValueSet.polytope([np.array([[1.0]]), np.array([[-1.0]])])
        for S in pv.sample(rng, 25):
            assert -1.0 <= S[0, 0] <= 1.0

    def test_json_round_trip(self):
        vs = ValueSet.polytope([np.array([[0.5, 0.0]]), np.array([[0.0, -1.0]])])
        again = ValueSet.from_dict(vs.to_dict())
        assert again.kind == "polytope"
        assert all(np.array_equal(a, b)
                   for a, b in zip(again.generators, vs.generators))
        iv = ValueSet.repeated_interval([(2, -1.0, 1.0), (1, 0.0, 0.5)])
        assert ValueSet.from_dict(iv.to_dict()).blocks == iv.blocks

    def test_from_dict_errors(self):
        with pytest.raises(ValueError, match='"type"'):
            ValueSet.from_dict({"type": "box"})
        with pytest.raises(ValueError, match='"generators"'):
            ValueSet.from_dict({"type": "polytope"})
        with pytest.raises(ValueError, match=r'"blocks\[0\]"'):
            ValueSet.from_dict({"type": "repeated_interval",
                                "blocks": [{"size": 1, "lo": 0.0}]})
        with pytest.raises(ValueError, match="JSON object"):
            ValueSet.from_dict([1, 2])


class TestMultiplierFamilies:
    def test_scalar_interval_on_unit_interval(self):
        # [a,b] = [0,1] with H = h > 0 gives [1 d] P [1 d]' = 2 h d (1 - d),
        # nonnegative exactly on the interval and zero at the endpoints
        vs = ValueSet.repeated_interval([(1, 0.0, 1.0)])
        h = 0.7
        P = robust._interval_multiplier([np.array([[h]])], vs.blocks, dual=False)
        for d in (-0.2, 0.0, 0.3, 1.0, 1.4):
            J = np.array([[1.0], [d]])
            val = float(J.T @ P @ J)
            assert val == pytest.approx(2 * h * d * (1 - d), abs=1e-12)
        assert multiplier_margin(vs, P) == pytest.approx(0.0, abs=1e-12)

    def test_interval_duality_is_exact_inversion(self):
        rng = np.random.default_rng(5)
        vs = ValueSet.repeated_interval([(1, -0.4, 0.7), (2, -0.2, 0.2)])
        Hs = [rng.standard_normal((s, s)) + 2.5 * np.eye(s)
              for s, _, _ in vs.blocks]
        P = robust._interval_multiplier(Hs, vs.blocks, dual=False)
        Pt = robust._interval_multiplier([np.linalg.inv(H) for H in Hs],
                                         vs.blocks, dual=True)
        assert np.allclose(Pt, np.linalg.inv(P), atol=1e-10)
        assert multiplier_margin(vs, Pt, dual=True) >= -1e-8 * scale_of(Pt)

    def test_attached_families_are_valid_and_inertial(self):
        rng = np.random.default_rng(1)
        vs = random_value_set(rng, count=3)
        mset = make_multiplier_set(vs)
        prob = sdp.LmiProblem()
        h = mset.attach_primal(prob, "P")
        prob.minimize(prob.scalar("t") * 0)
        P = h.extract(sdp.solve(prob).values)
        assert multiplier_margin(vs, P) >= -1e-8 * scale_of(P)
        # nonsingular with exactly p positive and q negative eigenvalues
        assert matops.inertia(P) == (vs.p, 0, vs.q)
        # inverses of primal members live in the dual family
        assert multiplier_margin(vs, np.linalg.inv(P), dual=True) >= \
            -1e-8 / scale_of(P)

        prob2 = sdp.LmiProblem()
        h2 = mset.attach_dual(prob2, "Pt")
        prob2.minimize(prob2.scalar("t") * 0)
        Pt = h2.extract(sdp.solve(prob2).values)
        assert multiplier_margin(vs, Pt, dual=True) >= -1e-8 * scale_of(Pt)
        assert multiplier_margin(vs, np.linalg.inv(Pt)) >= -1e-8 / scale_of(Pt)

    def test_zero_generator_admits_any_split_multiplier(self):
        vs = ValueSet.polytope([np.zeros((1, 1))])
        assert multiplier_margin(vs, np.diag([1.0, -1.0])) == pytest.approx(1.0)
        assert multiplier_margin(vs, np.diag([2.0, 3.0])) < 0

    def test_margin_rejects_wrong_shape(self):
        vs = ValueSet.polytope([np.zeros((1, 1))])
        with pytest.raises(ValueError, match="multiplier must be"):
            multiplier_margin(vs, np.eye(3))

    def test_make_multiplier_set_type_check(self):
        with pytest.raises(TypeError, match="ValueSet"):
            make_multiplier_set([np.zeros((1, 1))])


class TestAnalyzeRobust:
    def test_bound_dominates_frozen_samples(self):
        rng = np.random.default_rng(7)
        lp = random_robust_plant(rng, n=2)
        vs = random_value_set(rng, count=3)
        mset = make_multiplier_set(vs)
        closed = close_loop(lp, Controller.static(np.zeros((1, 1))))
        gamma, X, P = robust.analyze_robust(closed, mset)
        assert np.min(np.linalg.eigvalsh(X)) > 0
        assert multiplier_margin(vs, P) >= -1e-8 * scale_of(P)
        worst = max(hinf_norm(frozen_delta_close(closed, D))
                    for D in vs.vertices() + vs.sample(rng, 50))
        assert worst <= gamma * (1 + 1e-6)

    def test_interval_set_bound(self):
        rng = np.random.default_rng(11)
        lp = random_robust_plant(rng, n=2, coupling=0.2)
        vs = ValueSet.repeated_interval([(1, -0.5, 0.5)])
        mset = make_multiplier_set(vs)
        closed = close_loop(lp, Controller.static(np.zeros((1, 1))))
        gamma, _, P = robust.analyze_robust(closed, mset)
        assert multiplier_margin(vs, P) >= -1e-8 * scale_of(P)
        worst = max(hinf_norm(frozen_delta_close(closed, D))
                    for D in vs.vertices() + vs.sample(rng, 30))
        assert worst <= gamma * (1 + 1e-6)

    def test_degenerate_channel_is_nominal_analysis(self):
        rng = np.random.default_rng(2)
        nom = random_nominal_plant(rng, n=3)
        closed = close_loop(nom, Controller.static(np.zeros((1, 1))))
        gamma, X, P = robust.analyze_robust(closed, EMPTY)
        gamma_n, X_n = hinf.analyze(closed)
        assert gamma == gamma_n and np.array_equal(X, X_n)
        assert P.shape == (0, 0)

    def test_zero_generators_recover_nominal_level(self):
        rng = np.random.default_rng(3)
        lp = random_robust_plant(rng, n=3, coupling=0.3)
        zset = make_multiplier_set(ValueSet.polytope([np.zeros((1, 1))]))
        closed = close_loop(lp, Controller.static(np.zeros((1, 1))))
        gamma, _, _ = robust.analyze_robust(closed, zset)
        nominal = close_loop(lp.nominal_projection
                             if hasattr(lp, "nominal_projection") else
                             LfrPlant(A=lp.A, B2=lp.B2, B3=lp.B3, C2=lp.C2,
                                      C3=lp.C3, D22=lp.D22, D23=lp.D23,
                                      D32=lp.D32, p=0, q=0),
                             Controller.static(np.zeros((1, 1))))
        gamma_n, _ = hinf.analyze(nominal)
        assert gamma == pytest.approx(gamma_n, rel=1e-3)

    def test_rejects_open_loops_and_mismatched_sets(self):
        rng = np.random.default_rng(4)
        lp = random_robust_plant(rng, n=2)
        with pytest.raises(ValueError, match="closed loop"):
            robust.analyze_robust(lp, make_multiplier_set(
                random_value_set(rng)))
        closed = close_loop(lp, Controller.static(np.zeros((1, 1))))
        wrong = make_multiplier_set(random_value_set(rng, p=2, q=2))
        with pytest.raises(ValueError, match="uncertainty channel"):
            robust.analyze_robust(closed, wrong)

    def test_unstable_loop_reports_infeasible(self):
        rng = np.random.default_rng(6)
        lp = random_robust_plant(rng, n=2, stable=False, shift=1.0)
        closed = close_loop(lp, Controller.static(np.zeros((1, 1))))
        with pytest.raises(ValueError, match="robust"):
            robust.analyze_robust(closed, make_multiplier_set(
                random_value_set(rng, count=3, radius=0.3)))


class TestLowerBound:
    def test_nominal_plant_gives_full_order_bound(self):
        rng = np.random.default_rng(8)
        nom = random_nominal_plant(rng, n=3, m_d=2, k_e=2, stable=False,
                                   shift=0.3)
        gamma, X, Y, P, Pt = robust.lower_bound_gs(nom, EMPTY)
        gamma_dof, X_n, Y_n = hinf.lower_bound_dof(nom)
        assert gamma == gamma_dof
        assert np.array_equal(X, X_n) and np.array_equal(Y, Y_n)
        assert P.shape == (0, 0) and Pt.shape == (0, 0)

    def test_multipliers_valid_for_their_families(self):
        rng = np.random.default_rng(9)
        lp = random_robust_plant(rng, n=2)
        vs = random_value_set(rng, count=3)
        gamma, X, Y, P, Pt = robust.lower_bound_gs(lp, make_multiplier_set(vs))
        assert gamma > 0
        assert multiplier_margin(vs, P) >= -1e-8 * scale_of(P)
        assert multiplier_margin(vs, Pt, dual=True) >= -1e-8 * scale_of(Pt)
        assert np.min(np.linalg.eigvalsh(
            np.block([[X, np.eye(2)], [np.eye(2), Y]]))) > 0

    def test_shrinking_the_set_approaches_the_nominal_bound(self):
        rng = np.random.default_rng(10)
        lp = random_robust_plant(rng, n=2, coupling=0.3, stable=False)
        G = rng.standard_normal((1, 1))
        nominal = LfrPlant(A=lp.A, B2=lp.B2, B3=lp.B3, C2=lp.C2, C3=lp.C3,
                           D22=lp.D22, D23=lp.D23, D32=lp.D32, p=0, q=0)
        gamma_dof = hinf.lower_bound_dof(nominal, balance=False)[0]
        bounds = []
        for radius in (0.5, 0.1, 1e-3):
            vs = ValueSet.polytope([radius * G, -radius * G])
            bounds.append(robust.lower_bound_gs(
                lp, make_multiplier_set(vs), balance=False)[0])
        # growing the set can only grow the bound; the tiny set is nominal
        assert bounds[0] >= bounds[1] >= bounds[2] * (1 - 1e-6)
        assert bounds[2] == pytest.approx(gamma_dof, rel=1e-2)
        assert bounds[2] >= gamma_dof * (1 - 1e-4)


class TestDesignSideGain:
    def test_information_round_trip_on_full_authority_plant(self):
        rng = np.random.default_rng(12)
        lp_base = random_robust_plant(rng, n=3)
        n = 3
        lp = LfrPlant(A=lp_base.A, B1=lp_base.B1, B2=lp_base.B2,
                      B3=np.eye(n), C1=lp_base.C1, C2=lp_base.C2,
                      C3=lp_base.C3, D11=lp_base.D11, D12=lp_base.D12,
                      D13=np.zeros((1, n)), D21=lp_base.D21, D22=lp_base.D22,
                      D23=0.4 * rng.standard_normal((2, n)), D31=lp_base.D31,
                      D32=lp_base.D32, p=1, q=1)
        vs = random_value_set(rng, count=3)
        mset = make_multiplier_set(vs)
        F, Pt = robust.design_side_gain_robust(lp, mset, "information")
        assert F.kind == "full_information"
        assert multiplier_margin(vs, Pt, dual=True) >= -1e-8 * scale_of(Pt)
        gamma, _, _ = robust.analyze_robust(close_loop(lp, F), mset)
        assert_frozen_sound(lp, vs, F, gamma, rng)

    def test_actuation_round_trip(self):
        rng = np.random.default_rng(13)
        lp = random_robust_plant(rng, n=2)
        vs = random_value_set(rng, count=3)
        mset = make_multiplier_set(vs)
        E, P = robust.design_side_gain_robust(lp, mset, "actuation")
        assert E.kind == "full_actuation"
        assert multiplier_margin(vs, P) >= -1e-8 * scale_of(P)
        gamma, _, _ = robust.analyze_robust(close_loop(lp, E), mset)
        assert_frozen_sound(lp, vs, E, gamma, rng)

    def test_dualization_symmetry(self):
        # the actuation design on the transposed plant with transposed
        # value set achieves the information design's level
        rng = np.random.default_rng(14)
        lp = random_robust_plant(rng, n=2, stable=False)
        vs = random_value_set(rng, count=4, radius=0.4)
        mset = make_multiplier_set(vs)
        lp_t = transpose_plant(lp)
        mset_t = make_multiplier_set(
            ValueSet.polytope([G.T for G in vs.generators]))
        F, _ = robust.design_side_gain_robust(lp, mset, "information", seed=1)
        E, _ = robust.design_side_gain_robust(lp_t, mset_t, "actuation", seed=1)
        gF, _, _ = robust.analyze_robust(close_loop(lp, F), mset)
        gE, _, _ = robust.analyze_robust(close_loop(lp_t, E), mset_t)
        assert gF == pytest.approx(gE, rel=1e-3)

    def test_rejects_unknown_side(self):
        rng = np.random.default_rng(15)
        lp = random_robust_plant(rng, n=2)
        with pytest.raises(ValueError, match="side must be"):
            robust.design_side_gain_robust(lp, make_multiplier_set(
                random_value_set(rng)), "output")


class TestStepRobust:
    def test_alternating_steps_do_not_increase(self):
        rng = np.random.default_rng(16)
        lp = random_robust_plant(rng, n=3, coupling=0.2, stable=False)
        vs = random_value_set(rng, count=3, radius=0.4)
        mset = make_multiplier_set(vs)
        F, _ = robust.design_side_gain_robust(lp, mset, "information")
        s1 = robust.step_robust(lp, mset, "primal", F)
        assert isinstance(s1, RobustStepResult)
        assert s1.gain.kind == "full_actuation"
        assert multiplier_margin(vs, s1.multiplier) >= \
            -1e-8 * scale_of(s1.multiplier)
        s2 = robust.step_robust(lp, mset, "dual", s1.gain)
        assert s2.gain.kind == "full_information"
        assert multiplier_margin(vs, s2.multiplier, dual=True) >= \
            -1e-8 * scale_of(s2.multiplier)
        s3 = robust.step_robust(lp, mset, "primal", s2.gain)
        tol = 1 + 1e-4
        assert s2.gamma <= s1.gamma * tol
        assert s3.gamma <= s2.gamma * tol

    def test_embedded_static_controller_bounds_the_step(self):
        # F = K [C3 D31 D32] closes the loop exactly like K, so the primal
        # step at F cannot be worse than K's verified robust level
        rng = np.random.default_rng(17)
        lp = random_robust_plant(rng, n=2)
        vs = random_value_set(rng, count=3, radius=0.4)
        mset = make_multiplier_set(vs)
        K = Controller.static(np.zeros((1, 1)))
        gamma_K, _, _ = robust.analyze_robust(close_loop(lp, K), mset)
        F = Controller.full_information(
            K.K @ np.hstack([lp.C3, lp.D31, lp.D32]))
        step = robust.step_robust(lp, mset, "primal", F)
        assert step.gamma <= gamma_K * (1 + 1e-4)

    def test_nominal_plant_defers_to_plain_step(self):
        rng = np.random.default_rng(18)
        nom = random_nominal_plant(rng, n=3, m_d=2, k_e=2, stable=False,
                                   shift=0.3)
        gamma_dof, _, Y = hinf.lower_bound_dof(nom)
        F = hinf.design_side_gain(nom, "information", Y, 1.05 * gamma_dof)
        ours = robust.step_robust(nom, EMPTY, "primal", F, seed=3)
        plain = hinf.iteration_step(nom, "primal", F, seed=3)
        assert ours.gamma == plain.gamma
        assert np.array_equal(ours.certificate, plain.certificate)
        assert np.array_equal(ours.gain.E, plain.gain.E)
        assert ours.multiplier.shape == (0, 0) and ours.partner is None

    def test_static_mode_ties_the_certificates(self):
        rng = np.random.default_rng(19)
        lp = random_robust_plant(rng, n=2)
        vs = random_value_set(rng, count=3, radius=0.4)
        mset = make_multiplier_set(vs)
        F, _ = robust.design_side_gain_robust(lp, mset, "information")
        step = robust.step_robust(lp, mset, "primal", F, static_mode=True)
        assert np.array_equal(step.certificate, step.partner)

    def test_side_and_gain_validation(self):
        rng = np.random.default_rng(20)
        lp = random_robust_plant(rng, n=2)
        mset = make_multiplier_set(random_value_set(rng))
        F = Controller.full_information(np.zeros((1, 5)))
        with pytest.raises(ValueError, match="side must be"):
            robust.step_robust(lp, mset, "both", F)
        with pytest.raises(ValueError, match="full-information gain"):
            robust.step_robust(lp, mset, "primal",
                               Controller.static(np.zeros((1, 1))))
        E = Controller.full_actuation(np.zeros((5, 1)))
        with pytest.raises(ValueError, match="full-actuation gain"):
            robust.step_robust(lp, mset, "dual", F)
        with pytest.raises(ValueError, match="full-information"):
            robust.step_robust(lp, mset, "primal", E)

    def test_destabilizing_gain_is_rejected(self):
        rng = np.random.default_rng(21)
        lp = random_robust_plant(rng, n=2, stable=False, shift=1.0)
        mset = make_multiplier_set(random_value_set(rng, count=3, radius=0.2))
        F = Controller.full_information(np.zeros((1, 2 + 1 + 2)))
        with pytest.raises(ValueError, match="not stable"):
            robust.step_robust(lp, mset, "primal", F)


class TestReconstruct:
    def test_dynamic_reconstruction_from_step_certificates(self):
        rng = np.random.default_rng(22)
        lp = random_robust_plant(rng, n=2, stable=False)
        vs = random_value_set(rng, count=3, radius=0.4)
        mset = make_multiplier_set(vs)
        F, _ = robust.design_side_gain_robust(lp, mset, "information")
        step = robust.step_robust(lp, mset, "primal", F)
        level = 1.02 * step.gamma
        X, Y_part = step.certificate, step.partner
        K = robust.reconstruct_robust(lp, mset, X,
                                      matops.sym(np.linalg.inv(Y_part)),
                                      step.multiplier, level)
        assert K.kind == "dynamic" and K.Ac.shape == (2, 2)
        gamma, _, _ = robust.analyze_robust(close_loop(lp, K), mset)
        assert gamma <= level * (1 + 1e-3)
        assert_frozen_sound(lp, vs, K, gamma, rng)

    def test_nominal_full_order_oracle(self):
        rng = np.random.default_rng(23)
        nom = random_nominal_plant(rng, n=3, m_d=2, k_e=2, stable=False,
                                   shift=0.3)
        gamma, X, Y, P, _ = robust.lower_bound_gs(nom, EMPTY, balance=True)
        level = 1.03 * gamma
        K = robust.reconstruct_robust(nom, EMPTY, X, Y, P, level)
        assert K.kind == "dynamic"
        gamma_v, _ = hinf.analyze(close_loop(nom, K))
        assert gamma <= gamma_v <= level * (1 + 1e-3)

    def test_static_nominal_matches_plain_reconstruction(self):
        rng = np.random.default_rng(24)
        nom = random_nominal_plant(rng, n=3, m_d=2, k_e=2, stable=False,
                                   shift=0.3)
        rep = hinf.run_dual_iteration(nom, max_iters=3)
        level = 1.02 * rep.final_gamma_verified
        cert = hinf._step_certificate(nom, "primal",
                                      _first_information_gain(nom), level)
        if cert is None:
            pytest.skip("no certificate at this level")
        ours = robust.reconstruct_robust(nom, EMPTY, cert,
                                         matops.sym(np.linalg.inv(cert)),
                                         np.zeros((0, 0)), level,
                                         static_mode=True, seed=5)
        plain = hinf.reconstruct_static(nom, cert, level, seed=5)
        assert np.allclose(ours.K, plain.K)

    def test_margin_loss_raises(self):
        rng = np.random.default_rng(25)
        lp = random_robust_plant(rng, n=2)
        vs = random_value_set(rng, count=3)
        mset = make_multiplier_set(vs)
        bad = np.eye(2)
        P = np.diag([1.0, -1.0])
        with pytest.raises(ValueError, match="coupling condition|elimination"):
            robust.reconstruct_robust(lp, mset, bad, bad, P, 0.9)


def _first_information_gain(nom):
    gamma_dof, _, Y = hinf.lower_bound_dof(nom)
    return hinf.design_side_gain(nom, "information", Y, 1.05 * gamma_dof)


class TestRunDualIterationRobust:
    def test_history_is_monotone_and_sandwiched(self):
        rng = np.random.default_rng(26)
        lp = random_robust_plant(rng, n=3, coupling=0.2, stable=False)
        vs = random_value_set(rng, count=4, radius=0.4)
        mset = make_multiplier_set(vs)
        rep = robust.run_dual_iteration_robust(lp, mset, max_iters=7)
        gammas = [h[2] for h in rep.gamma_history]
        assert all(b <= a for a, b in zip(gammas, gammas[1:]))
        assert all(rep.gamma_lower <= g * (1 + 1e-6) for g in gammas)
        assert rep.final_controller.kind == "dynamic"
        assert rep.final_controller.Ac.shape == (3, 3)
        assert_frozen_sound(lp, vs, rep.final_controller,
                            rep.final_gamma_verified, rng, count=20)

    def test_zero_uncertainty_reproduces_the_plain_trajectory(self):
        rng = np.random.default_rng(27)
        nom = random_nominal_plant(rng, n=3, m_d=2, k_e=2, stable=False,
                                   shift=0.3)
        rep_r = robust.run_dual_iteration_robust(nom, EMPTY, max_iters=5)
        rep_n = hinf.run_dual_iteration(nom, max_iters=5)
        assert [(h[1], h[2]) for h in rep_r.gamma_history] == \
            [(h[1], h[2]) for h in rep_n.gamma_history]
        assert rep_r.gamma_lower == rep_n.gamma_lower
        # the robust path reconstructs a full-order dynamic controller,
        # which may improve on the plain static one
        assert rep_r.final_controller.kind == "dynamic"
        assert rep_r.final_gamma_verified <= \
            rep_n.final_gamma_verified * (1 + 1e-6)

    def test_static_mode_returns_a_static_controller(self):
        rng = np.random.default_rng(28)
        lp = random_robust_plant(rng, n=2)
        vs = random_value_set(rng, count=3, radius=0.4)
        mset = make_multiplier_set(vs)
        rep = robust.run_dual_iteration_robust(lp, mset, max_iters=4,
                                               static_mode=True)
        assert rep.final_controller.kind == "static"
        assert_frozen_sound(lp, vs, rep.final_controller,
                            rep.final_gamma_verified, rng, count=10)

    def test_static_mode_on_nominal_plant_delegates(self):
        rng = np.random.default_rng(29)
        nom = random_nominal_plant(rng, n=3, m_d=2, k_e=2, stable=False,
                                   shift=0.3)
        rep_r = robust.run_dual_iteration_robust(nom, EMPTY, max_iters=4,
                                                 static_mode=True)
        rep_n = hinf.run_dual_iteration(nom, max_iters=4)
        assert rep_r.gamma_history == rep_n.gamma_history
        assert np.array_equal(rep_r.final_controller.K, rep_n.final_controller.K)

    def test_alt_init_flag_goes_through_the_proximity_program(self):
        rng = np.random.default_rng(30)
        lp = random_robust_plant(rng, n=2)
        vs = random_value_set(rng, count=3, radius=0.4)
        mset = make_multiplier_set(vs)
        rep = robust.run_dual_iteration_robust(lp, mset, max_iters=3,
                                               alt_init=True)
        assert rep.gamma_history
        assert rep.final_gamma_verified >= rep.gamma_lower * (1 - 1e-6)

    def test_rejects_bad_max_iters(self):
        rng = np.random.default_rng(31)
        lp = random_robust_plant(rng, n=2)
        with pytest.raises(ValueError, match="max_iters"):
            robust.run_dual_iteration_robust(lp, make_multiplier_set(
                random_value_set(rng)), max_iters=0)


class TestAltInit:
    def test_nominal_proximity_gap_is_tiny(self):
        # with empty multipliers the proximity program reduces to the dual
        # step feasibility system, so the optimal alpha collapses to zero
        rng = np.random.default_rng(32)
        nom = random_nominal_plant(rng, n=3, m_d=2, k_e=2, stable=False,
                                   shift=0.3)
        E, _ = robust.design_side_gain_robust(nom, EMPTY, "actuation")
        closed = robust._as_closed_lfr(close_loop(nom, E))
        gamma, _, _ = robust.analyze_robust(closed, EMPTY)
        prob, _ = robust._alt_init_problem(nom, closed, EMPTY,
                                           (1.05 * gamma) ** 2)
        sol = sdp.solve(prob)
        assert sol.ok and sol.values["alpha"] <= 1e-6

    def test_randomized_instances_feed_a_feasible_primal_step(self):
        rng = np.random.default_rng(33)
        for k in range(3):
            lp = random_robust_plant(rng, n=2, coupling=0.2)
            vs = random_value_set(rng, count=3, radius=0.4)
            mset = make_multiplier_set(vs)
            E, _ = robust.design_side_gain_robust(lp, mset, "actuation")
            F = robust.alt_init_robust(lp, mset, E)
            step = robust.step_robust(lp, mset, "primal", F)
            assert np.isfinite(step.gamma)

    def test_doubling_recovers_from_an_over_tight_level(self):
        rng = np.random.default_rng(34)
        lp = random_robust_plant(rng, n=2)
        vs = random_value_set(rng, count=3, radius=0.4)
        mset = make_multiplier_set(vs)
        E, _ = robust.design_side_gain_robust(lp, mset, "actuation")
        gamma_gs = robust.lower_bound_gs(lp, mset, balance=False)[0]
        # far below the achievable level: only the doubling path can succeed
        F = robust.alt_init_robust(lp, mset, E, gamma=gamma_gs / 64.0)
        assert F.kind == "full_information"
        with pytest.raises(ValueError, match="doublings"):
            robust.alt_init_robust(lp, mset, E, gamma=gamma_gs / 1e6,
                                   max_doublings=2)

    def test_rejects_wrong_gain_kind(self):
        rng = np.random.default_rng(35)
        lp = random_robust_plant(rng, n=2)
        with pytest.raises(ValueError, match="full-actuation"):
            robust.alt_init_robust(lp, make_multiplier_set(
                random_value_set(rng)), Controller.static(np.zeros((1, 1))))


class TestDkIterate:
    def test_v1_descends_from_dual_iteration_output(self):
        rng = np.random.default_rng(36)
        lp = random_robust_plant(rng, n=2, coupling=0.2, stable=False)
        vs = random_value_set(rng, count=4, radius=0.4)
        mset = make_multiplier_set(vs)
        rep = robust.run_dual_iteration_robust(lp, mset, max_iters=4)
        dk = robust.dk_iterate(lp, mset, "V1", rep.final_controller, iters=3)
        gammas = [h[2] for h in dk.gamma_history]
        assert all(b <= a * (1 + 1e-4) for a, b in zip(gammas, gammas[1:]))
        assert dk.final_gamma_verified <= gammas[0] * (1 + 1e-4)
        assert np.isnan(dk.gamma_lower)

    def test_v2_refreshes_the_certificate_pair(self):
        rng = np.random.default_rng(37)
        lp = random_robust_plant(rng, n=2, coupling=0.2, stable=False)
        vs = random_value_set(rng, count=3, radius=0.4)
        mset = make_multiplier_set(vs)
        rep = robust.run_dual_iteration_robust(lp, mset, max_iters=3)
        dk = robust.dk_iterate(lp, mset, "V2", rep.final_controller, iters=2)
        assert dk.final_controller.kind == "dynamic"
        gammas = [h[2] for h in dk.gamma_history]
        assert all(b <= a * (1 + 1e-3) for a, b in zip(gammas, gammas[1:]))

    def test_nominal_variant_runs_the_classical_alternation(self):
        rng = np.random.default_rng(38)
        nom = random_nominal_plant(rng, n=3, m_d=2, k_e=2, stable=False,
                                   shift=0.3)
        rep = hinf.run_dual_iteration(nom, max_iters=3)
        dk = robust.dk_iterate(nom, None, "nominal", rep.final_controller,
                               iters=3)
        gammas = [h[2] for h in dk.gamma_history]
        assert len(gammas) == 6
        assert all(b <= a * (1 + 1e-4) for a, b in zip(gammas, gammas[1:]))
        phases = [h[1] for h in dk.gamma_history]
        assert phases[::2] == ["analysis"] * 3

    def test_nominal_variant_requires_nominal_plant(self):
        rng = np.random.default_rng(39)
        lp = random_robust_plant(rng, n=2)
        with pytest.raises(ValueError, match="without"):
            robust.dk_iterate(lp, None, "nominal",
                              Controller.static(np.zeros((1, 1))), iters=1)

    def test_rejects_destabilizing_initialization(self):
        rng = np.random.default_rng(40)
        lp = random_robust_plant(rng, n=2, stable=False, shift=1.0)
        mset = make_multiplier_set(random_value_set(rng, count=3, radius=0.2))
        with pytest.raises(ValueError, match="stabilizing"):
            robust.dk_iterate(lp, mset, "V1",
                              Controller.static(np.zeros((1, 1))), iters=2)

    def test_variant_and_structure_validation(self):
        rng = np.random.default_rng(41)
        lp = random_robust_plant(rng, n=2)
        mset = make_multiplier_set(random_value_set(rng))
        K = Controller.static(np.zeros((1, 1)))
        with pytest.raises(ValueError, match="variant"):
            robust.dk_iterate(lp, mset, "V3", K, iters=1)
        with pytest.raises(ValueError, match="output-feedback"):
            robust.dk_iterate(lp, mset, "V1",
                              Controller.full_information(np.zeros((1, 5))),
                              iters=1)
        with pytest.raises(TypeError, match="multiplier set"):
            robust.dk_iterate(lp, None, "V1", K, iters=1)
        with pytest.raises(ValueError, match="iters"):
            robust.dk_iterate(lp, mset, "V1", K, iters=0)

    def test_indefinite_uncertainty_block_is_rejected(self):
        # the synthesis Schur complement needs the z-pairing block psd,
        # which fails for multipliers of sets that exclude zero
        with pytest.raises(ValueError, match="positive semidefinite"):
            robust._uncertainty_input_factor(np.diag([-1.0, -1.0]), 1)
        L1 = robust._uncertainty_input_factor(
            np.array([[4.0, 0.0], [0.0, -1.0]]), 1)
        assert np.allclose(L1 @ L1.T, [[4.0]])


class TestAugmentation:
    def test_static_closure_of_augmented_plant_is_the_dynamic_loop(self):
        rng = np.random.default_rng(42)
        lp = random_robust_plant(rng, n=3)
        aug = robust._augment_for_dynamic(lp)
        Ac = rng.standard_normal((3, 3))
        Bc = rng.standard_normal((3, 1))
        Cc = rng.standard_normal((1, 3))
        Dc = rng.standard_normal((1, 1))
        Z = np.block([[Ac, Bc], [Cc, Dc]])
        static = close_loop(aug, Controller.static(Z))
        dynamic = close_loop(lp, Controller.dynamic(Ac, Bc, Cc, Dc))
        for name in ("A", "B1", "B2", "C1", "D11", "D12", "C2", "D21", "D22"):
            assert np.allclose(getattr(static, name), getattr(dynamic, name))

    def test_completion_inverse_recovers_the_pair(self):
        rng = np.random.default_rng(43)
        n = 3
        M = rng.standard_normal((n, n))
        Y = matops.sym(M @ M.T + np.eye(n))
        X = matops.sym(np.linalg.inv(Y) + np.eye(n))
        Xcl = robust._coupling_completion(X, Y)
        assert np.min(np.linalg.eigvalsh(Xcl)) > 0
        assert np.allclose(np.linalg.inv(Xcl)[:n, :n], Y)
        with pytest.raises(ValueError, match="coupling"):
            robust._coupling_completion(np.linalg.inv(Y) / 2, Y)
