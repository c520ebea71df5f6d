import json
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markov_feller.checkers import (
    ProbeSchedule,
    TestFunction,
    Verdict,
    blowup_certificate,
    blowup_threshold,
    check_asf,
    check_asymptotic_e_property,
    check_e_property,
    default_probes,
    identity_asf_refutation,
    inner_values,
    radial_probes,
    scaling_asf_bound,
)
from markov_feller.errors import NotALimitPoint
from markov_feller.hamel import AdditiveFunction, SpanPoint
from markov_feller.semigroups import FiniteKernel, Identity, Scaling
from markov_feller.spaces import Metric, Point, PseudoMetricFamily

from oracles import scan_threshold

EUC = Metric.euclidean()
SCALING = Scaling(AdditiveFunction.default())
ORIGIN = Point.of(0, 0)


def horizontal(n_max):
    return [SpanPoint.of(n, 0) for n in range(1, n_max + 1)]


def vertical(m_max):
    return [SpanPoint.of(0, m) for m in range(1, m_max + 1)]


def test_scaling_asf_bound_examples():
    assert scaling_asf_bound(1, 1, Fraction(-1)) == pytest.approx(math.exp(-1), rel=1e-15)
    assert scaling_asf_bound(20, 1, Fraction(-1)) == pytest.approx(20 * math.exp(-20), rel=1e-15)
    assert scaling_asf_bound(20, 1, Fraction(-1)) == pytest.approx(4.122e-8, rel=1e-3)
    assert scaling_asf_bound(5, 0, Fraction(-1)) == 0
    with pytest.raises(ValueError):
        scaling_asf_bound(5, 1, Fraction(1))


def test_bound_linear_in_gamma():
    for n in (1, 7, 30):
        a = scaling_asf_bound(n, 1, Fraction(-1))
        assert scaling_asf_bound(n, 0.1, Fraction(-1)) == pytest.approx(0.1 * a, rel=1e-15)
        assert scaling_asf_bound(n, 0.01, Fraction(-1)) == pytest.approx(0.01 * a, rel=1e-15)


def test_blowup_examples():
    y, x = Point.of(1, 0), Point.of(1.1, 0)
    c = blowup_certificate(y, x, 10, Fraction(1))
    assert c.exponent == 10
    assert c.value == pytest.approx(0.1 * math.exp(10), rel=1e-12)
    assert c.value == pytest.approx(2202.65, abs=0.01)
    assert blowup_certificate(y, x, 0, Fraction(1)).value == pytest.approx(0.1, rel=1e-12)
    # Beyond float range the exponent still certifies.
    far = blowup_certificate(y, x, 1000, Fraction(1))
    assert far.value == math.inf and far.exponent == 1000 and far.log_value(1000) > 990


def test_blowup_threshold_against_scan():
    y, x = Point.of(1, 0), Point.of(1.1, 0)
    c = blowup_certificate(y, x, 0, Fraction(1), target=1e6)
    assert c.threshold == scan_threshold(c.base_gap, 1.0, 1e6) == 17
    assert c.base_gap * math.exp(16) < 1e6 <= c.base_gap * math.exp(17)
    for target in (1.0, 3.7, 1e3, 1e12, 1e300):
        for slope in (Fraction(1), Fraction(1, 3), Fraction(5, 2)):
            assert blowup_threshold(0.1, slope, target) == scan_threshold(0.1, float(slope), target)


def test_blowup_rejects():
    with pytest.raises(ValueError):
        blowup_certificate(Point.of(1, 0), Point.of(1.1, 0), 3, Fraction(-1))
    with pytest.raises(ValueError):
        blowup_certificate(Point.of(1, 0), Point.of(0, 1), 3, Fraction(1))


def test_asymptotic_e_example():
    y = Point.of(1, 0)
    probes = [Point.of(1 + 1 / n, 0) for n in (10, 20, 50)]
    # (1.1, 0) is 0.10000000000000009 from y in floats, so use a radius that holds it
    sched = ProbeSchedule(vertical(30), [0.2], [probes], tail_window=10)
    sched.validate(EUC, y)
    fns = [TestFunction.distance(EUC, ORIGIN)]
    report = check_asymptotic_e_property(SCALING, y, sched, fns)
    assert report.verdict is Verdict.FAILS_WITH_CERTIFICATE
    cert = report.certificate
    assert cert.slope == 1 and cert.offset == 0
    top = report.trace[-1]
    assert top.exact_exponent == 30
    assert top.value == pytest.approx((1.1 - 1) * math.exp(30), rel=1e-12)
    assert top.value == pytest.approx(1.07e12, rel=1e-2)
    assert cert.replay(SCALING, EUC, y)
    assert cert.witnesses[0].threshold == scan_threshold(cert.witnesses[0].base_gap, 1.0, cert.eps0)


def test_asymptotic_e_needs_long_tail():
    sched = ProbeSchedule(vertical(5), [0.1], [[Point.of(1.05, 0)]], tail_window=10)
    with pytest.raises(ValueError):
        check_asymptotic_e_property(SCALING, Point.of(1, 0), sched, [TestFunction.distance(EUC, ORIGIN)])


def test_asf_example_values():
    y = ORIGIN
    probes = [[Point.of(0.5, 0)]]
    fam = PseudoMetricFamily(EUC)
    report = check_asf(SCALING, y, horizontal(30), fam, [1.0], probes)
    rows = {r.n_or_m: r for r in report.trace}
    assert rows[2].value == pytest.approx(math.exp(-2), rel=1e-15)
    assert rows[2].value == pytest.approx(0.13534, abs=1e-5)
    assert rows[20].value <= 20 * math.exp(-20)
    assert report.verdict is Verdict.HOLDS_ON_PROBES
    assert report.certificate.exact and report.certificate.all_within_bound


def test_asf_sequence_family_length():
    fam = PseudoMetricFamily(EUC, [1, 2, 3])
    with pytest.raises(ValueError):
        check_asf(SCALING, ORIGIN, horizontal(5), fam, [1.0], [[Point.of(0.5, 0)]])


def test_identity_e_property_exact():
    radii = [10.0 ** -k for k in range(8)]
    y = ORIGIN
    probes = default_probes(y, radii, EUC, seed=3)
    sched = ProbeSchedule(vertical(5), radii, probes)
    anchored = TestFunction.truncated_distance(EUC, y)
    report = check_e_property(Identity(), y, sched, [anchored])
    assert report.verdict is Verdict.HOLDS_ON_PROBES
    # the axis probes sit on the sphere, so D_k hits Lip * gamma_k
    assert [v for _, v in report.radius_values] == radii


def test_identity_refutation_examples():
    y = Point.of(0.0)
    z = Point.of(0.4)
    lin = PseudoMetricFamily(Metric.pnorm(1))
    cert = identity_asf_refutation(lin, y, 1.0, [z], 10)
    assert cert.n0 == 2 and cert.values[1] == (2, 0.8) and cert.reaches_one_at == 3
    assert cert.lower_bound == Fraction(1, 2) and cert.holds
    geo = identity_asf_refutation(PseudoMetricFamily(Metric.pnorm(1), "geometric"), y, 1.0, [z], 10)
    assert geo.n0 == 1 and geo.values[0] == (1, 0.8)
    with pytest.raises(NotALimitPoint, match="limit point"):
        identity_asf_refutation(lin, y, 0.3, [z, y], 10)


def test_identity_asf_fails():
    y = ORIGIN
    radii = [1.0, 0.1, 0.01]
    probes = default_probes(y, radii, EUC)
    fam = PseudoMetricFamily(EUC)
    report = check_asf(Identity(), y, horizontal(400), fam, radii, probes)
    assert report.verdict is Verdict.FAILS_WITH_CERTIFICATE
    assert all(c.holds for c in report.certificate.items)


def test_probes_stay_in_closed_ball():
    radii = [1.0, 1e-3, 1e-9]
    for y in (ORIGIN, Point.of(1.0, 0), Point.of(-3.3, 7.1)):
        probes = default_probes(y, radii, EUC, seed=11, n_radial=0 if y == ORIGIN else 8)
        ProbeSchedule(vertical(1), radii, probes).validate(EUC, y)
        assert all(len(p) >= 8 for p in probes)
        assert all(y not in p for p in probes)
    assert default_probes(ORIGIN, radii, EUC, seed=5) == default_probes(ORIGIN, radii, EUC, seed=5)
    assert len(radial_probes(Point.of(2, 0), [0.5], EUC)[0]) == 8


def test_schedule_validation():
    with pytest.raises(ValueError):
        ProbeSchedule(vertical(3), [0.1, 0.5], [[], []])
    with pytest.raises(ValueError):
        ProbeSchedule(vertical(3), [0.5], [[], []])
    with pytest.raises(ValueError):
        ProbeSchedule(vertical(3), [0.5], [[Point.of(2, 0)]]).validate(EUC, ORIGIN)


def test_table_test_function_lipschitz():
    pts = [Point.of(0.0), Point.of(1.0), Point.of(3.0)]
    metric = Metric.table(pts, [[0, 1, 3], [1, 0, 2], [3, 2, 0]])
    f = TestFunction.table([(pts[0], 0.0), (pts[1], 0.5), (pts[2], 2.0)], metric)
    assert f.lipschitz == 0.75
    with pytest.raises(ValueError):
        TestFunction.table([(pts[0], 0.0), (pts[1], 2.0), (pts[2], 2.0)], metric, lipschitz=1.0)


def test_kernel_e_property_runs():
    states = tuple(Point.of(float(i)) for i in range(3))
    kernel = FiniteKernel(states, [["1/2", "1/2", 0], ["1/4", "1/2", "1/4"], [0, "1/2", "1/2"]])
    metric = Metric.pnorm(1)
    sched = ProbeSchedule([SpanPoint.of(k) for k in range(1, 8)], [1.0], [[states[1]]])
    report = check_e_property(kernel, states[0], sched, [TestFunction.distance(metric, states[0])])
    assert report.verdict in set(Verdict)
    # differences of U_t f contract under this doubly stochastic, aperiodic chain
    vals = [r.value for r in report.trace]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_report_serialisation_is_stable():
    y = Point.of(1, 0)
    sched = ProbeSchedule(vertical(30), [0.1], [[Point.of(1.1, 0)]])
    r1 = check_asymptotic_e_property(SCALING, y, sched, [TestFunction.distance(EUC, ORIGIN)])
    r2 = check_asymptotic_e_property(SCALING, y, sched, [TestFunction.distance(EUC, ORIGIN)])
    assert r1.json_text() == r2.json_text()
    json.loads(r1.json_text())
    header = r1.csv_text().splitlines()[0]
    assert header == "property,gamma,n_or_m,value,exact_exponent"


@settings(max_examples=30, deadline=None)
@given(
    st.floats(min_value=-2, max_value=2),
    st.floats(min_value=-2, max_value=2),
    st.integers(min_value=0, max_value=1000),
    st.lists(st.integers(0, 3), min_size=2, max_size=3),
)
def test_tail_max_below_full_max(y0, y1, seed, weights):
    # restricting the sup over t to a tail window can only lower it
    w = weights[:2]
    if not (min(w) < 0 < max(w)):
        w = [-1 - w[0], 1 + w[1]]
    sg = Scaling(AdditiveFunction.from_weights(w))
    y = Point.of(y0, y1)
    radii = [1.0, 0.1]
    probes = default_probes(y, radii, EUC, seed=seed)
    times = [SpanPoint.of(k, k % 3) for k in range(12)]
    sched = ProbeSchedule(times, radii, probes, tail_start=2, tail_window=5)
    fns = [TestFunction.distance(EUC, ORIGIN), TestFunction.truncated_distance(EUC, y)]
    full = inner_values(sg, y, sched, fns)
    tail = inner_values(sg, y, sched, fns, tail_only=True)
    for F, T in zip(full, tail):
        for fk, tk in zip(F, T):
            assert all(t <= f for f, t in zip(fk, tk))
