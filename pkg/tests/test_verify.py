import dataclasses
import re

import numpy as np
import pytest

from isotori.bianchi import build_cube
from isotori.darboux import closed_darboux_discrete, closed_darboux_smooth, move_transform_off_plane
from isotori.loops import make_discrete_circle
from isotori.moebius import concircularity_defect, infinitesimal_cross_ratio, solve_fourth_point
from isotori.torus import default_walk_2torus, extract_torus
from isotori.verify import (
    CheckReport,
    Tolerances,
    VerificationReport,
    check_cr_factorization,
    check_quads_concircular,
    check_semidiscrete_ribbons,
    check_theorem_instance,
    cube_reports,
    discrete_cell_reports,
)

LINE = re.compile(r"^check=\w+ scope=\S+ value=(nan|-?\d\.\d{9}e[+-]\d{2}) tol=\d\.\d{9}e[+-]\d{2} pass=[01]$")


def with_loop(net, point, loop):
    loops = dict(net.loops)
    loops[point] = loop
    return dataclasses.replace(net, loops=loops)


def scrambled_strip(base, targets):
    """Polygon whose quads with ``base`` are concircular with the given cross ratios."""
    x = base.samples
    out = [x[0] + np.array([0.1, 0.05, 0.3])]
    for j in range(len(x) - 1):
        out.append(solve_fourth_point(x[j], x[j + 1], out[j], targets[j]))
    return base.with_samples(np.array(out))


def test_square_quad_has_zero_defect():
    square = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    assert concircularity_defect(*square) <= 1e-15


def test_discrete_net_passes_every_cell_check(discrete_net):
    reports = VerificationReport(discrete_cell_reports(discrete_net, Tolerances()))
    assert reports.passed, reports.text()
    assert reports.get("quad_concircular").value <= 1e-9
    assert reports.get("cr_alternating_product").value <= 1e-10


def test_square_polygon_net_passes():
    square = make_discrete_circle(3, 4)
    layer = [
        move_transform_off_plane(closed_darboux_discrete(square, 3.0), 3, np.pi / 4),
        move_transform_off_plane(closed_darboux_discrete(square, 8.0), 3, np.pi / 8),
    ]
    net = extract_torus(build_cube(square, layer), default_walk_2torus(2))
    assert check_quads_concircular(net).passed
    assert check_cr_factorization(net).passed


def test_perturbed_vertex_is_located(discrete_net):
    point = (2,)
    samples = discrete_net.loops[point].samples.copy()
    samples[5] += np.array([1e-3, 0.0, 0.0])
    bad = with_loop(discrete_net, point, discrete_net.loops[point].with_samples(samples))
    report = check_quads_concircular(bad)
    assert not report.passed
    assert re.search(r"@j[45]$", report.scope)


def test_scrambled_cross_ratios_fail_factorization(discrete_net, rng):
    base = discrete_net.loops[(0,)]
    targets = rng.uniform(2.0, 4.0, size=base.size)
    bad = with_loop(discrete_net, (1,), scrambled_strip(base, targets))
    report = check_cr_factorization(bad)
    assert not report.passed
    assert not report.get("cr_factorization_fit").passed


def test_negative_polarization_keeps_sign_pattern(discrete_net):
    # m = -1 makes every loop-direction face cross ratio negative.
    report = check_cr_factorization(discrete_net)
    assert report.get("cr_sign_pattern").value == 0


def test_offplane_ribbons_pass(offplane_net):
    report = check_semidiscrete_ribbons(offplane_net)
    assert report.passed, report.text()
    assert report.get("ribbon_tangency").value <= 1e-6


def test_ribbon_cross_ratios_factor_as_three_eighths(offplane_net):
    loops = offplane_net.loops
    first = infinitesimal_cross_ratio(loops[(0,)].samples, loops[(1,)].samples).value
    second = infinitesimal_cross_ratio(loops[(1,)].samples, loops[(2,)].samples).value
    np.testing.assert_allclose(first / second, 3.0 / 8.0, atol=1e-4)


def test_translated_loop_fails_tangency(offplane_net):
    loop = offplane_net.loops[(2,)]
    moved = loop.with_samples(loop.samples + np.array([0.05, 0.0, 0.0]))
    report = check_semidiscrete_ribbons(with_loop(offplane_net, (2,), moved))
    tangency = report.get("ribbon_tangency")
    assert not tangency.passed
    icr = report.get("ribbon_icr")
    assert not icr.applicable and np.isnan(icr.value)
    assert icr.line().startswith("check=ribbon_icr scope=ribbon:n/a value=nan")


def test_ribbon_checks_need_semidiscrete(discrete_net):
    with pytest.raises(ValueError):
        check_semidiscrete_ribbons(discrete_net)


def test_offplane_net_is_a_theorem_instance(offplane_net):
    report = check_theorem_instance(offplane_net, 3, 2)
    assert report.passed, report.text()
    assert report.get("fullness_rank").scope == "global:rank=3"


def test_discrete_net_is_a_theorem_instance(discrete_net):
    report = check_theorem_instance(discrete_net, 3, 2)
    assert report.passed, report.text()


def test_three_torus_is_a_theorem_instance(net_r4):
    report = check_theorem_instance(net_r4, 4, 3)
    assert report.passed, report.text()
    assert report.get("fullness_rank").scope == "global:rank=4"


def test_planar_construction_is_not_full(circle256):
    layer = [closed_darboux_smooth(circle256, 3.0), closed_darboux_smooth(circle256, 8.0)]
    net = extract_torus(build_cube(circle256, layer), default_walk_2torus(2))
    report = check_theorem_instance(net, 3, 2)
    assert not report.get("fullness_rank").passed
    assert report.get("fullness_rank").scope == "global:rank=2"


def test_wrong_dimension_is_reported(offplane_net):
    assert not check_theorem_instance(offplane_net, 3, 3).get("dimension").passed


def test_cube_reports_cover_every_edge(offplane_cube):
    report = cube_reports(offplane_cube)
    assert report.passed, report.text()
    edges = [c for c in report.checks if c.name == "ribbon_tangency"]
    assert len(edges) == 4


def test_report_lines_follow_the_grammar(offplane_net):
    report = check_theorem_instance(offplane_net, 3, 2)
    lines = report.lines()
    for line in lines[:-1]:
        assert LINE.match(line), line
    assert re.fullmatch(r"summary checks=\d+ failed=0 pass=1", lines[-1])
    assert report.text().endswith("\n")


def test_pass_flag_is_value_within_tolerance():
    assert CheckReport("x", "global", 1e-7, 1e-6, True).line() == (
        "check=x scope=global value=1.000000000e-07 tol=1.000000000e-06 pass=1"
    )
    failing = VerificationReport([CheckReport("x", "global", 2.0, 1.0, False)])
    assert failing.lines()[-1] == "summary checks=1 failed=1 pass=0"


def test_tolerances_scale_uniformly():
    scaled = Tolerances().scaled(10.0)
    assert scaled.closure == pytest.approx(1e-5)
    assert scaled.cross_ratio == pytest.approx(1e-9)
