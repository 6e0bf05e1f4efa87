import pytest

from kljngrid.filters import (Band, FabricState, FilterFlags, Mode, Port, Terminal, box_config,
                              modes_for_round, propagate_band, verify_round_isolation)
from kljngrid.grid import Loop, Network
from kljngrid.scheduler import Round, full_schedule, rounds_for_distance

YES, NO = True, False


def test_state_1_truth_tables():
    cfg = box_config(Mode.STATE_1)
    assert cfg.a == FilterFlags(YES, YES)
    assert cfg.b == FilterFlags(NO, NO)
    assert cfg.c == FilterFlags(YES, NO)
    assert cfg.d == cfg.e == FilterFlags(NO, YES)


def test_state_2_truth_tables():
    cfg = box_config(Mode.STATE_2)
    assert cfg.a == FilterFlags(NO, YES)
    assert cfg.b == FilterFlags(YES, NO)
    assert cfg.c == FilterFlags(NO, NO)
    assert cfg.d == cfg.e == FilterFlags(NO, YES)


def test_modes_for_round_examples():
    net = Network(7)
    st = modes_for_round(net, Round((Loop(0, 7),)))
    assert st.box_modes == (Mode.STATE_2,) + (Mode.STATE_1,) * 6 + (Mode.STATE_2,)
    st = modes_for_round(net, rounds_for_distance(net, 1)[0])
    assert set(st.box_modes) == {Mode.STATE_2}
    st = modes_for_round(net, Round(()))
    assert set(st.box_modes) == {Mode.STATE_1}


def test_modes_for_round_rejects_overlap():
    with pytest.raises(ValueError):
        modes_for_round(Network(7), Round((Loop(0, 3), Loop(1, 4))))


def component_of(comps, t):
    return next(c for c in comps if t in c)


def test_state_1_host_passes_kljn_through_but_not_to_power():
    st = FabricState(Network(2), (Mode.STATE_2, Mode.STATE_1, Mode.STATE_2))
    comps = propagate_band(st, Band.KLJN_BAND)
    c = component_of(comps, Terminal(1, Port.LINE_LEFT))
    assert Terminal(1, Port.LINE_RIGHT) in c
    assert Terminal(1, Port.POWER) not in c


def test_state_1_host_gets_power():
    st = FabricState(Network(2), (Mode.STATE_1,) * 3)
    comps = propagate_band(st, Band.POWER_FREQ)
    c = component_of(comps, Terminal(0, Port.LINE_LEFT))
    assert all(Terminal(h, Port.POWER) in c for h in range(3))


def test_state_2_host_separates_units():
    st = FabricState(Network(2), (Mode.STATE_2,) * 3)
    comps = propagate_band(st, Band.KLJN_BAND)
    assert component_of(comps, Terminal(1, Port.UNIT_LEFT)) != \
        component_of(comps, Terminal(1, Port.UNIT_RIGHT))


def pairing_components(report):
    return [c for c in report.kljn_components
            if sum(t.port in (Port.UNIT_LEFT, Port.UNIT_RIGHT) for t in c) == 2]


def test_isolation_two_loops_sharing_host():
    net = Network(7)
    rnd = Round((Loop(0, 3), Loop(3, 6)))
    rep = verify_round_isolation(modes_for_round(net, rnd), rnd)
    assert rep.ok, rep.violations
    pairs = pairing_components(rep)
    assert len(pairs) == 2
    units = [{t for t in c if t.port in (Port.UNIT_LEFT, Port.UNIT_RIGHT)} for c in pairs]
    assert {Terminal(0, Port.UNIT_RIGHT), Terminal(3, Port.UNIT_LEFT)} in units
    assert {Terminal(3, Port.UNIT_RIGHT), Terminal(6, Port.UNIT_LEFT)} in units


def test_isolation_end_to_end_loop():
    net = Network(7)
    rnd = Round((Loop(0, 7),))
    rep = verify_round_isolation(modes_for_round(net, rnd), rnd)
    assert rep.ok
    (pair,) = pairing_components(rep)
    assert {t for t in pair if t.port in (Port.UNIT_LEFT, Port.UNIT_RIGHT)} == \
        {Terminal(0, Port.UNIT_RIGHT), Terminal(7, Port.UNIT_LEFT)}


def test_isolation_detects_inactive_interior_endpoint():
    net = Network(7)
    rnd = Round((Loop(0, 3), Loop(3, 7)))
    st = modes_for_round(net, rnd).with_mode(3, Mode.STATE_1)
    rep = verify_round_isolation(st, rnd)
    assert not rep.ok
    assert any("not connected" in v for v in rep.violations)


@pytest.mark.parametrize("n", range(1, 16))
def test_every_round_clean_and_mutation_sensitive(n):
    net = Network(n)
    for rnd in full_schedule(net).rounds:
        st = modes_for_round(net, rnd)
        assert verify_round_isolation(st, rnd).ok
        for h in net.hosts:
            flipped = Mode.STATE_1 if st.box_modes[h] is Mode.STATE_2 else Mode.STATE_2
            assert not verify_round_isolation(st.with_mode(h, flipped), rnd).ok, (rnd, h)


def test_power_reaches_every_host_in_any_mode_mix():
    import itertools
    net = Network(4)
    for modes in itertools.product(list(Mode), repeat=5):
        comps = propagate_band(FabricState(net, modes), Band.POWER_FREQ)
        c = component_of(comps, Terminal(0, Port.LINE_LEFT))
        assert all(Terminal(h, Port.POWER) in c for h in net.hosts)


def test_fabric_dump_shape():
    st = modes_for_round(Network(2), Round((Loop(0, 1),)))
    d = st.as_dict()
    assert d["hosts"][0]["mode"] == "STATE_2"
    assert d["hosts"][2]["filters"]["A"] == {"kljn": True, "power": True}


@pytest.mark.parametrize("n", [1, 2, 5, 8, 11])
def test_batch_checker_agrees_with_reporting_checker(n):
    from kljngrid.filters import isolation_ok_batch, single_flip_states

    net = Network(n)
    for rnd in full_schedule(net).rounds:
        st = modes_for_round(net, rnd)
        stack = single_flip_states(st)
        batch = isolation_ok_batch(stack, rnd)
        for row, verdict in zip(stack, batch):
            modes = tuple(Mode.STATE_2 if a else Mode.STATE_1 for a in row)
            assert verify_round_isolation(FabricState(net, modes), rnd).ok == verdict


def test_empty_round_all_inactive_is_clean():
    net = Network(5)
    rnd = Round(())
    assert verify_round_isolation(modes_for_round(net, rnd), rnd).ok
