"""Replicated query protocol: schedule symmetry, determinism, bisection counts."""
import math

import numpy as np
import pytest

from secopt import (
    BudgetError,
    DomainError,
    ParameterError,
    ProtocolConfig,
    RngStream,
    Transcript,
    epoch_gd_estimate,
    epoch_gd_feed,
    epoch_gd_init,
    epoch_gd_propose,
    majority_repetitions,
    make_abs,
    make_uniformly_convex,
    run_plain_convex,
    run_protocol,
    run_secure_bisection,
    run_secure_convex,
    subinterval_index,
)


def test_subinterval_index_examples() -> None:
    assert subinterval_index(0.37, 0.1) == 4
    assert subinterval_index(0.0, 0.1) == 1
    assert subinterval_index(1.0, 0.1) == 10  # right-edge absorption
    assert subinterval_index(0.95, 0.15) == 6  # remainder absorbed by the last
    with pytest.raises(DomainError):
        subinterval_index(-0.1, 0.1)
    with pytest.raises(DomainError):
        subinterval_index(1.1, 0.1)


def test_config_validation() -> None:
    with pytest.raises(ParameterError):
        ProtocolConfig(delta_adv=0.6).validate()  # S=1
    with pytest.raises(ParameterError):
        ProtocolConfig(eps_adv=0.06).validate()  # 2*eps_adv >= delta_adv
    with pytest.raises(ParameterError):
        ProtocolConfig(mode="Nope").validate()
    with pytest.raises(BudgetError):
        ProtocolConfig(T=5).validate()
    with pytest.raises(ParameterError):
        ProtocolConfig(mode="NoisyBisection", p=0.4).validate()
    with pytest.warns(UserWarning):
        ProtocolConfig(eps=0.03).validate()  # 2*eps > eps_adv


def test_config_hash_and_updates() -> None:
    a = ProtocolConfig(T=1000)
    b = a.with_updates(T=2000)
    assert a.T == 1000 and b.T == 2000
    assert a.config_hash() != b.config_hash()
    assert a.config_hash() == ProtocolConfig(T=1000).config_hash()


def _convex_run(t: int = 6000, seed: int = 31) -> Transcript:
    config = ProtocolConfig(T=t, overrides={"C0": 2.0})
    f = make_uniformly_convex(2.0, 1.0, 0.42)
    return run_secure_convex(config, f, RngStream(seed, (0,)))


def test_phase_structure_and_mirror_symmetry() -> None:
    config = ProtocolConfig(T=6000, overrides={"C0": 2.0})
    tr = _convex_run()
    k, s = config.phases, config.subintervals
    assert len(tr) == k * s
    pts = tr.points.reshape(k, s)
    rows = np.sort(pts, axis=1)
    # each phase is one offset mirrored at spacing delta_adv across subintervals
    gaps = np.diff(rows, axis=1)
    assert np.max(np.abs(gaps - config.delta_adv)) <= 1e-12
    assert np.all(rows[:, 0] >= 0.0) and np.all(rows[:, 0] < config.delta_adv + 1e-12)
    # every subinterval is queried exactly K times
    counts = np.bincount(tr.sub, minlength=s + 1)[1:]
    assert np.all(counts == k)
    # exactly one informative response per phase
    assert np.all(tr.informative.reshape(k, s).sum(axis=1) == 1)
    # the informative point lies in its own home subinterval
    inf_pts = tr.points[tr.informative]
    inf_sub = tr.sub[tr.informative]
    assert np.all(inf_sub == [subinterval_index(float(x), 0.1) for x in inf_pts])


def test_transcript_matches_per_call_reference() -> None:
    config = ProtocolConfig(T=600, overrides={"C0": 2.0})
    f = make_uniformly_convex(2.0, 1.0, 0.42)
    tr = run_secure_convex(config, f, RngStream(5, (9,)))

    s_count, n = config.subintervals, config.phases
    rng = RngStream(5, (9,))
    init_gen = rng.child(0).generator()
    perm_gen = rng.child(1).generator()
    noise_gen = rng.child(2).generator()
    x_init = float(init_gen.uniform(0.0, 1.0))
    state = epoch_gd_init(
        config.kappa, config.lam, config.delta, config.W, n, x_init,
        overrides=config.overrides, domain=(0.0, 1.0),
    )
    pts = []
    for _ in range(n):
        order = np.argsort(perm_gen.random(s_count))
        z = noise_gen.normal(0.0, config.sigma, size=2)
        xb = epoch_gd_propose(state)
        j = subinterval_index(xb, config.delta_adv)
        off = xb - (j - 1) * config.delta_adv
        pts.extend(order * config.delta_adv + off)
        if not state.done:
            epoch_gd_feed(state, float(f.subgrad(xb)) + z[1])
    assert np.array_equal(tr.points, np.array(pts))
    assert tr.x_hat == epoch_gd_estimate(state)


def test_run_is_deterministic_per_stream() -> None:
    a, b = _convex_run(seed=8), _convex_run(seed=8)
    c = _convex_run(seed=9)
    assert np.array_equal(a.points, b.points) and a.x_hat == b.x_hat
    assert not np.array_equal(a.points, c.points)


def test_with_replacement_ablation() -> None:
    config = ProtocolConfig(T=3000, with_replacement=True, overrides={"C0": 2.0})
    f = make_uniformly_convex(2.0, 1.0, 0.42)
    tr = run_secure_convex(config, f, RngStream(13, (0,)))
    assert len(tr) == config.phases * config.subintervals
    per_phase = tr.informative.reshape(config.phases, config.subintervals).sum(axis=1)
    assert per_phase.max() > 1 or per_phase.min() == 0  # duplicates happen
    # only realized home hits can feed the solver
    assert tr.effective_gradients <= int(tr.informative.sum())


def test_transcript_round_trip() -> None:
    tr = _convex_run(t=800)
    back = Transcript.from_text(tr.to_text(public=False))
    assert np.array_equal(back.points, tr.points)
    assert np.array_equal(back.phase, tr.phase)
    assert np.array_equal(back.sub, tr.sub)
    assert np.array_equal(back.informative, tr.informative)
    assert back.config_hash == tr.config_hash and back.mode == tr.mode
    pub = Transcript.from_text(tr.to_text(public=True))
    assert np.array_equal(pub.points, tr.points)
    assert pub.informative.sum() == 0
    with pytest.raises(ParameterError):
        Transcript.from_text("not a transcript\n1,2,3\n")


def test_public_view_is_a_pure_copy() -> None:
    tr = _convex_run(t=800)
    pub = tr.public_view()
    pub[0] = -99.0
    assert tr.points[0] != -99.0
    text = tr.to_text(public=True)
    assert "informative" not in text
    assert all(line.count(",") == 3 for line in text.splitlines()[1:])


def test_bisection_exact_query_counts() -> None:
    for delta_adv, eps, expected_b in ((0.1, 1e-4, 10), (0.05, 1e-4, 9)):
        config = ProtocolConfig(
            T=20000, mode="Bisection", delta_adv=delta_adv,
            eps_adv=delta_adv / 4, eps=eps, sigma=0.0, x_star=0.4321,
        )
        tr = run_protocol(config, make_abs(0.4321), RngStream(2, (0,)))
        s = config.subintervals
        assert expected_b == math.ceil(math.log2(delta_adv / eps))
        assert len(tr) == s * expected_b
        assert abs(tr.x_hat - 0.4321) <= eps
        counts = np.bincount(tr.sub, minlength=s + 1)[1:]
        assert np.all(counts == expected_b)


def test_bisection_interval_width_halves() -> None:
    config = ProtocolConfig(T=40, mode="Bisection", eps=1e-6, sigma=0.0, x_star=0.73)
    tr = run_secure_bisection(config, make_abs(0.73), RngStream(4, (0,)))
    # only K=4 phases fit the budget: width 0.1 / 2^4, estimate inside it
    assert len(tr) == 40
    assert abs(tr.x_hat - 0.73) <= 0.1 / 2**4
    assert not tr.remainder_risk


def test_bisection_remainder_risk_flag() -> None:
    config = ProtocolConfig(
        T=600, mode="Bisection", delta_adv=0.15, eps_adv=0.05, eps=1e-3,
        sigma=0.0, x_star=0.95,
    )
    tr = run_secure_bisection(config, make_abs(0.95), RngStream(4, (1,)))
    assert tr.remainder_risk  # x* = 0.95 > S * delta_adv = 0.9
    tr2 = run_secure_bisection(
        config.with_updates(x_star=0.5), make_abs(0.5), RngStream(4, (2,))
    )
    assert not tr2.remainder_risk


def test_majority_repetitions_sizing() -> None:
    m = majority_repetitions(0.75, 1e-3, 0.05, 0.1)
    assert m % 2 == 1
    halvings = math.log2(0.1 / 1e-3)
    raw = math.ceil(math.log(2.0 * halvings / 0.05) / (2.0 * 0.25**2))
    assert m in (raw, raw + 1)
    assert majority_repetitions(0.9, 1e-3, 0.05, 0.1) < m  # easier oracle, fewer votes
    with pytest.raises(ParameterError):
        majority_repetitions(0.5, 1e-3, 0.05, 0.1)


def test_noisy_bisection_accuracy() -> None:
    config = ProtocolConfig(T=20000, mode="NoisyBisection", p=0.75, eps=1e-3)
    gen = RngStream(600, ()).generator()
    hits = 0
    for trial in range(50):
        x_star = float(gen.uniform(0.05, 0.95))
        tr = run_protocol(
            config.with_updates(x_star=x_star), make_abs(x_star),
            RngStream(601, (trial,)),
        )
        hits += abs(tr.x_hat - x_star) <= config.eps
    assert hits >= 46  # designed failure rate is well under delta = 0.05


def test_plain_control_leaks_every_query() -> None:
    config = ProtocolConfig(T=2000)
    f = make_uniformly_convex(2.0, 1.0, 0.42)
    tr = run_plain_convex(config, f, RngStream(21, (0,)))
    assert len(tr) == 2000
    assert tr.mode == "PlainEpochGD"
    assert tr.informative.all()


def test_mode_mismatch_rejected() -> None:
    config = ProtocolConfig(T=2000, mode="Bisection", sigma=0.0, x_star=0.5)
    f = make_uniformly_convex(2.0, 1.0, 0.5)
    with pytest.raises(ParameterError):
        run_secure_convex(config, f, RngStream(1, (0,)))
    with pytest.raises(ParameterError):
        run_secure_bisection(config.with_updates(mode="ConvexEpochGD"), f, RngStream(1, (0,)))
