import json

import numpy as np
import pytest

from hhvb.bundle import (BundleSpec, act, act_batch, bundled_specs, chain_spec,
                         component, gauge_equivalent, load_spec, multiplier, multiplier_batch,
                         spec_from_dict, spec_to_dict, validate)
from hhvb.errors import SpecError
from hhvb.mobius import GroupElement, random_ball_points
from hhvb.poly import Poly

SPECS = [chain_spec(1, [0, 0], -3.0), chain_spec(1, [0, 0, 0], -2.5),
         chain_spec(2, [0, 1, 2], -3.0), chain_spec(2, [2, 1, 0], -4.25),
         load_spec("ball2_multiplicity")]


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"n{s.n}-dim{s.dim}")
def test_multiplier_cocycle(spec, rng):
    for _ in range(10):
        g1, g2 = GroupElement.random(spec.n, rng), GroupElement.random(spec.n, rng)
        z = random_ball_points(spec.n, 1, rng, 0.7)
        from hhvb.mobius import act as move
        lhs = multiplier_batch(spec, g1 @ g2, z)[0]
        rhs = multiplier_batch(spec, g1, move(g2, z))[0] @ multiplier_batch(spec, g2, z)[0]
        assert np.abs(lhs - rhs).max() < 1e-9


@pytest.mark.parametrize("spec", SPECS[:3], ids=lambda s: f"n{s.n}-dim{s.dim}")
def test_action_is_a_group_action(spec, rng):
    f = Poly.random(spec.n, spec.dim, 3, rng)
    g1, g2 = GroupElement.random(spec.n, rng), GroupElement.random(spec.n, rng)
    Z = random_ball_points(spec.n, 5, rng, 0.6)
    inner = lambda W: act_batch(spec, g2, f, W)
    lhs = act_batch(spec, g1 @ g2, f, Z)
    rhs = act_batch(spec, g1, inner, Z)
    assert np.abs(lhs - rhs).max() < 1e-9 * (1 + np.abs(lhs).max())


def test_identity_acts_trivially(rng):
    spec = SPECS[2]
    f = Poly.random(2, spec.dim, 2, rng)
    z = np.array([0.1, 0.2j])
    assert np.allclose(act(spec, GroupElement.identity(2), f, z), f(z))
    assert np.allclose(multiplier(spec, GroupElement.identity(2), z), np.eye(spec.dim))


def test_flag_is_invariant(rng):
    spec = SPECS[1]
    # a section supported in layers ≥ 1 stays there
    f = Poly.random(1, 3, 3, rng)
    for v in f.terms.values():
        v[0] = 0
    g = GroupElement.random(1, rng)
    vals = act_batch(spec, g, f, random_ball_points(1, 6, rng))
    assert np.abs(vals[:, 0]).max() < 1e-14


def test_multiplier_is_lower_triangular(rng):
    spec = SPECS[2]
    m = multiplier(spec, GroupElement.random(2, rng), np.array([0.3, -0.1j]))
    assert np.abs(m[:1, 1:]).max() < 1e-14 and np.abs(m[1:3, 3:]).max() < 1e-14


def test_component_extraction(rng):
    spec = SPECS[2]
    f = Poly.random(2, spec.dim, 1, rng)
    c = component(spec, f, 1, 0)
    assert c.dim == 2 and c.max_abs_diff(f.map(np.eye(spec.dim)[1:3])) == 0


def test_validate_accepts_bundled():
    for name in bundled_specs():
        assert validate(load_spec(name)).valid, name


def test_validate_rejects_non_filiform_product():
    spec = BundleSpec(2, -3.0, [[(0, 1)], [(1, 1)], [(0, 1)]],
                      {(1, 0, 0): [[1.0]], (2, 0, 0): [[1.0]]})
    rep = validate(spec)
    assert not rep.valid and rep.violations[0].kind == "filiform"
    # a zero product along the same triple is allowed
    assert validate(spec.with_edges({(1, 0, 0): [[1.0]], (2, 0, 0): [[0.0]]})).valid


def test_validate_reports_each_problem():
    spec = BundleSpec(2, -3.0, [[(0, 1), (0, 2)], [(2, 1)]], {(1, 0, 0): [[1.0]]},
                      mu={(0, 1): -np.eye(2)})
    kinds = {v.kind for v in validate(spec).violations}
    assert {"duplicate", "mu", "admissible"} <= kinds
    disc = BundleSpec(1, -1.0, [[(0, 1)], [(0, 1)]], {}, indecomposable=True)
    assert [v.kind for v in validate(disc).violations] == ["indecomposable"]


def test_gauge_equivalence():
    s = load_spec("ball2_multiplicity")
    a = np.array([[1.0, 2.0], [0.0, 3.0]])
    s2 = s.with_edges({k: 4.0 * v @ a for k, v in s.edges.items()})
    assert gauge_equivalent(s, s2)
    assert not gauge_equivalent(s, s.with_edges({k: 0 * v for k, v in s.edges.items()}))


def test_json_round_trip():
    for name in bundled_specs():
        s = load_spec(name)
        s2 = spec_from_dict(json.loads(json.dumps(spec_to_dict(s))))
        assert s2.dim == s.dim and s2.lam == s.lam
        for k in s.edges:
            assert np.allclose(s.edges[k], s2.edges[k])


def test_json_errors_are_located(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 1,\n "lambda": -1.0,\n "layers": [[{"m": 0}]]\n,}')
    with pytest.raises(SpecError, match=r"bad.json:4:"):
        load_spec(str(bad))
    doc = {"n": 1, "lambda": -1.0, "layers": [[{"m": 0}], [{"m": 0}]],
           "edges": [{"j": 1, "from": 0, "to": 0, "y": [["x", 0]]}]}
    with pytest.raises(SpecError, match=r"edges\[0\]\.y"):
        spec_from_dict(doc)
    with pytest.raises(SpecError, match="no such spec"):
        load_spec("definitely_missing")
