import math

import numpy as np
import pytest

from qfsm.compiler import compile_machine
from qfsm.fsm import Fsm, halting_set
from qfsm.grover import (SupportError, classify, devolve, diffuse, evolve, exact_marked_values,
                         grover_iterations_for, grover_round, in_domain, init_superposition, mark,
                         marked_mass, search, success_probability)
from qfsm.regex import parse_regex

from machines import M2, random_fsm, random_targets


@pytest.fixture(scope="module")
def m2k3():
    return compile_machine(M2, {2}, 3)


@pytest.fixture(scope="module")
def single():
    # N = 4 with exactly one marked input: the word "1"
    fsm = parse_regex("1")
    return compile_machine(fsm, fsm.accepts, 1)


def test_init_superposition(single):
    s = init_superposition(single)
    assert len(s) == 4
    assert np.allclose(s.amp, 0.5)
    assert np.all(s.nodes == single.machine.start) and np.all(s.out == 0)
    assert s.norm() == pytest.approx(1.0, abs=1e-15)


def test_evolve_devolve_exact(m2k3):
    s = init_superposition(m2k3)
    e = evolve(s, m2k3)
    assert sorted(e.amp.tolist(), key=abs) == sorted(s.amp.tolist(), key=abs)
    back = devolve(e, m2k3)
    assert back.as_dict() == s.as_dict()


def test_evolved_marked_mass(m2k3):
    assert marked_mass(evolve(init_superposition(m2k3), m2k3), m2k3) == pytest.approx(3 / 16, abs=1e-15)


def test_mark_properties(m2k3):
    e = evolve(init_superposition(m2k3), m2k3)
    assert mark(mark(e, m2k3), m2k3).as_dict() == e.as_dict()
    assert mark(e, m2k3).norm() == pytest.approx(e.norm(), abs=1e-15)
    unmarked = compile_machine(Fsm(4, M2.arcs, 0), {3}, 3)
    e2 = evolve(init_superposition(unmarked), unmarked)
    assert mark(e2, unmarked).as_dict() == e2.as_dict()


def test_diffuse_uniform_fixed_point(m2k3):
    s = init_superposition(m2k3)
    assert np.allclose(diffuse(s, m2k3).amp, s.amp, atol=1e-15)


def test_diffuse_requires_domain(m2k3):
    e = evolve(init_superposition(m2k3), m2k3)
    assert not in_domain(e, m2k3)
    with pytest.raises(SupportError):
        diffuse(e, m2k3)


def test_one_round_finds_single_marked(single):
    s = grover_round(init_superposition(single), single)
    assert abs(marked_mass(evolve(s, single), single) - 1.0) <= 1e-12
    assert diffuse(s, single).norm() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n, m, expected", [(16, 3, 1), (4, 1, 1), (8, 8, 0), (1024, 1, 25)])
def test_iterations_for(n, m, expected):
    assert grover_iterations_for(n, m) == expected


def test_iterations_for_zero():
    with pytest.raises(ValueError):
        grover_iterations_for(16, 0)


def test_success_probability_closed_form():
    assert success_probability(4, 1, 1) == pytest.approx(1.0, abs=1e-15)
    # sin(3t) = sin(t)(3 - 4 sin^2 t) with sin^2 t = 3/16
    assert success_probability(16, 3, 1) == pytest.approx(3 / 16 * 2.25 ** 2, abs=1e-15)


@pytest.mark.parametrize("seed", range(12))
def test_marked_mass_tracks_closed_form(seed):
    fsm = random_fsm(seed, 4, 0.2, 0.3)
    targets = random_targets(seed, 4)
    k = 2 + seed % 6  # N up to 256
    cm = compile_machine(fsm, targets, k)
    n, m = cm.domain_size, len(halting_set(fsm, targets, k))
    s = init_superposition(cm)
    for j in range(6):
        expected = success_probability(n, m, j) if m else 0.0
        assert abs(marked_mass(evolve(s, cm), cm) - expected) <= 1e-9
        s = grover_round(s, cm)


def test_exact_marked_values(m2k3):
    words = {classify(m2k3, v)[0] for v in exact_marked_values(m2k3)}
    assert words == {"11", "011", "101"}


def test_classify_zero(m2k3):
    assert classify(m2k3, 0) == (None, False)


def test_search_auto(m2k3):
    r = search(m2k3, "auto", shots=200, seed=42)
    assert r.iterations == 1
    assert abs(r.marked_mass - math.sin(3 * math.asin(math.sqrt(3 / 16))) ** 2) <= 1e-9
    assert sum(s.count for s in r.samples) == 200
    assert {s.word for s in r.samples if s.marked} <= {"11", "011", "101"}


def test_search_fixed_and_reproducible(m2k3):
    a = search(m2k3, 2, shots=50, seed=7)
    b = search(m2k3, 2, shots=50, seed=7)
    assert a == b and a.mode == "fixed" and a.iterations == 2


def test_search_all_marked():
    fsm = parse_regex("(0|1)*")
    cm = compile_machine(fsm, fsm.accepts, 2)
    # every word is accepted; only the zero register is unmarked
    r = search(cm, "auto", shots=100, seed=1)
    assert r.iterations == grover_iterations_for(8, 7)
    assert all(s.marked for s in r.samples if s.word is not None)


def test_search_m_equals_n_degenerate():
    assert grover_iterations_for(16, 16) == 0


def test_search_bbht_no_solution():
    cm = compile_machine(Fsm(4, M2.arcs, 0), {3}, 3)
    r = search(cm, "bbht", seed=3)
    assert not r.found
    assert 12 < r.iterations <= 12 + 4


def test_search_requires_targets():
    cm = compile_machine(M2, None, 2)
    with pytest.raises(ValueError):
        search(cm)


def test_history_recorded(m2k3):
    r = search(m2k3, 3, shots=10, seed=0, record=True)
    assert len(r.history) == 3
    assert r.history[-1] == pytest.approx(r.marked_mass)
