import random
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eampcf import machine as eam
from eampcf.compile import compile_program
from eampcf.dump import dump, format_machine, load_dump, parse_dump
from eampcf.frontend import parse_term
from eampcf.machine import (
    IDENTITY,
    AddressTable,
    App,
    Call,
    Cell,
    Err,
    Errored,
    Final,
    FixN,
    Halted,
    InvalidMachine,
    Load,
    Machine,
    Next,
    Num,
    OutOfFuel,
    append_tape,
    fix_machine,
    fix_program,
    interconvertible,
    is_final,
    is_stuck,
    numeral_machine,
    run,
    run_address,
    step,
    use_table,
    validity,
)

import properties

SEEDS = st.integers(min_value=0, max_value=2**32)
PROPERTY_SETTINGS = settings(max_examples=300, deadline=None)

SUCC1 = Machine((None,), (Load(0), eam.Succ(0, 0), Call(0)))
ADD_AUX = Machine(
    (None,) * 5,
    (Load(0), Load(1), Load(2), eam.Pred(1, 3), eam.Succ(2, 4), App(0, 3, 0), App(0, 4, 0), eam.Test(1, 2, 0, 0), Call(0)),
)


def succ2(table):
    s = table.intern(SUCC1)
    return Machine((None, None), (Load(0), Load(1), App(0, 1, 1), App(0, 1, 1), Call(1)), (s,))


def add(table):
    return table.apply(FixN(0), table.intern(ADD_AUX))


def reaches(m, target, table, limit=200):
    """Whether literal stepping from ``m`` visits the machine ``target``."""
    return any(state == target for state in properties.trajectory(m, table, limit))


def constant(table, k, n):
    """A machine that discards ``n`` arguments and then behaves as the numeral ``k``."""
    return table.apply(table.intern(eam.proj(n + 1, 1)), Num(k))


# ---------------------------------------------------------------- validity

def test_validity_examples():
    a = Cell(0)
    registers = (Num(7), a, None)
    assert validity((eam.Pred(0, 2), Call(2)), registers)
    assert validity((Load(2), Load(8), eam.Test(0, 1, 2, 0), Call(0)), registers)
    assert not validity((Load(0), Load(2), Load(8), Call(8)), registers)
    assert validity((), registers)
    assert validity((), ())


def test_validity_rejects_misplaced_instructions():
    assert not validity((Call(0), Load(0)), (Num(1),))
    assert not validity((Call(0), Call(0)), (Num(1),))
    assert not validity((App(0, 0, 0), Load(0), Call(0)), (Num(1),))
    assert not validity((App(0, 1, 0), Call(0)), (Num(1), None))


def test_invalid_machines_cannot_be_built():
    with pytest.raises(InvalidMachine):
        Machine((None,), (Call(0),))


# ---------------------------------------------------------------- the address table

def test_intern_examples():
    table = AddressTable()
    assert table.intern(Machine((Num(5),))) == Num(5)
    assert table.intern(fix_machine(0)) == FixN(0)
    assert table.intern(Machine((FixN(2), None, None, None), fix_program(2))) == FixN(2)
    first, second = table.intern(IDENTITY), table.intern(Machine((None,), (Load(0), Call(0))))
    assert first == second and isinstance(first, Cell)
    assert len(table) == 1


def test_near_fixpoints_are_ordinary_cells():
    table = AddressTable()
    wrong_index = Machine((FixN(1), None), fix_program(0))
    assert table.intern(wrong_index).tag == "cell"
    with_tape = Machine((FixN(0), None), fix_program(0), (Num(0),))
    assert table.intern(with_tape).tag == "cell"


def test_lookup_examples():
    table = AddressTable()
    assert table.lookup(Num(3)) == Machine((Num(3),))
    y0 = table.lookup(FixN(0))
    assert y0.registers[0] == FixN(0)
    assert y0.program == (Load(1), App(0, 1, 0), App(1, 0, 1), Call(1))
    assert table.lookup(table.intern(SUCC1)) == SUCC1
    with pytest.raises(KeyError):
        table.lookup(Cell(99))


def test_apply_examples():
    table = AddressTable()
    b = table.intern(IDENTITY)
    assert table.lookup(table.apply(Num(3), b)) == Machine((Num(3),), (), (b,))
    c = table.apply(table.apply(b, Num(1)), Num(2))
    assert table.lookup(c).tape == (Num(1), Num(2))
    assert table.apply_all(b, [Num(1), Num(2)]) == c
    result = run_address(table.apply(b, Num(4)), 100, table)
    assert isinstance(result, Halted) and result.numeral == 4


def test_append_tape_examples():
    assert append_tape(IDENTITY, []) is IDENTITY
    b = Cell(0)
    assert append_tape(numeral_machine(2), [b]) == Machine((Num(2),), (), (b,))


def test_reserved_machines():
    assert numeral_machine(0) == Machine((Num(0),))
    assert fix_machine(0).program == (Load(1), App(0, 1, 0), App(1, 0, 1), Call(1))
    assert fix_machine(1).registers == (FixN(1), None, None)


def test_is_stuck_examples():
    assert is_stuck(IDENTITY)
    assert not is_stuck(append_tape(IDENTITY, [Num(0)]))
    assert not is_stuck(numeral_machine(3))
    assert is_final(numeral_machine(3)) and is_final(IDENTITY)


def test_use_table_isolates_the_default_table():
    with use_table() as outer:
        a = eam.intern(SUCC1)
        with use_table() as inner:
            assert eam.intern(IDENTITY) == Cell(0)
            assert len(inner) == 1
        assert eam.current_table() is outer
        assert eam.lookup(a) == SUCC1


def test_empty_tables_are_used_when_passed():
    table = AddressTable()
    assert compile_program(parse_term("1"), table).tag == "cell"
    assert len(table) > 0


def test_concurrent_interning_agrees():
    table = AddressTable()
    machines = [Machine((Num(k), None), (Load(1), Call(0))) for k in range(200)]
    results = [None] * 8

    def work(slot):
        results[slot] = [table.intern(m) for m in machines]

    threads = [threading.Thread(target=work, args=(i,)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(r == results[0] for r in results)
    assert len(table) == 200


@PROPERTY_SETTINGS
@given(SEEDS)
def test_intern_and_lookup_are_inverse(seed):
    _, table, machines = properties.random_machines(seed)
    for m in machines:
        a = table.intern(m)
        assert table.lookup(a) == m
        assert table.intern(table.lookup(a)) == a


# ---------------------------------------------------------------- steps

def test_step_examples():
    table = AddressTable()
    assert step(numeral_machine(4), table) is Final
    m = Machine((Num(0),), (eam.Pred(0, 0), Call(0)))
    assert step(m, table) == Next(Machine((Num(0),), (Call(0),)))
    i = table.intern(IDENTITY)
    assert step(Machine((i,), (eam.Succ(0, 0), Call(0))), table) is Err
    assert step(IDENTITY, table) is Final


def test_step_forces_inner_machines():
    table = AddressTable()
    inner = table.apply(table.intern(SUCC1), Num(2))
    m = Machine((inner,), (eam.Pred(0, 0), Call(0)))
    result = step(m, table)
    assert isinstance(result, Next)
    loaded = table.intern(Machine((Num(2),), (eam.Succ(0, 0), Call(0))))
    assert result.machine == Machine((loaded,), (eam.Pred(0, 0), Call(0)))
    final = run(m, 100, table)
    assert isinstance(final, Halted) and final.numeral == 2


def test_loads_beyond_the_register_file_are_discarded():
    table = AddressTable()
    assert not validity((eam.Succ(0, 5), Call(0)), (Num(3),))
    loads = Machine((None,), (Load(4), Load(0), Call(0)), (Num(1), Num(2)))
    assert run(loads, 10, table).numeral == 2


def test_errors_propagate_from_forced_machines():
    table = AddressTable()
    bad = table.intern(Machine((table.intern(IDENTITY),), (eam.Succ(0, 0), Call(0))))
    m = Machine((bad,), (eam.Pred(0, 0), Call(0)))
    assert step(m, table) is Err
    assert isinstance(run(m, 10, table), Errored)
    assert isinstance(run(m, 10, table, faithful=True), Errored)


# ---------------------------------------------------------------- runs

def test_run_examples():
    table = AddressTable()
    result = run_address(table.apply_all(add(table), [Num(1), Num(3)]), 10_000, table)
    assert isinstance(result, Halted) and result.numeral == 4
    result = run_address(table.apply(table.intern(succ2(table)), Num(1)), 1_000, table)
    assert isinstance(result, Halted) and result.numeral == 3
    result = run_address(table.apply(table.intern(SUCC1), Num(0)), 100, table)
    assert result.numeral == 1
    omega = table.apply(FixN(0), table.intern(IDENTITY))
    assert isinstance(run_address(omega, 1_000, table), OutOfFuel)


def test_add_follows_the_unfolding():
    table = AddressTable()
    a = add(table)
    start = table.lookup(table.apply_all(a, [Num(1), Num(3)]))
    # after unfolding the body runs with the recursive call in R0
    unfolded = table.lookup(table.apply_all(table.intern(ADD_AUX), [a, Num(1), Num(3)]))
    assert reaches(start, unfolded, table)


def test_run_stops_at_fuel():
    table = AddressTable()
    omega = table.lookup(table.apply(FixN(0), table.intern(IDENTITY)))
    assert run(omega, 25, table).steps == 25
    assert run(omega, 25, table, faithful=True).steps == 25


def test_golden_trace():
    with use_table() as table:
        start = table.apply(table.intern(IDENTITY), Num(4))
        lines = []
        run_address(start, 100, table, trace=lines)
    assert lines == [
        "step 0 | LOAD 0 | regs=[_] | tape=[num:4]",
        "step 1 | CALL 0 | regs=[num:4] | tape=[]",
        "step 2 | FINAL | regs=[num:4] | tape=[]",
    ]


def test_traces_replay_identically_in_fresh_tables():
    source = parse_term(r"fix (\f x y. ifz y x (f (succ x) (pred y))) 2 1")
    traces = []
    for _ in range(2):
        with use_table() as table:
            lines = []
            run_address(compile_program(source, table), 10_000, table, trace=lines)
            traces.append(lines)
    assert traces[0] == traces[1]
    assert traces[0][-1].split(" | ")[1] == "FINAL"


@PROPERTY_SETTINGS
@given(SEEDS)
def test_step_is_deterministic(seed):
    properties.check_step_determinism(seed)


@PROPERTY_SETTINGS
@given(SEEDS)
def test_tape_extension(seed):
    properties.check_tape_extension(seed)


@PROPERTY_SETTINGS
@given(SEEDS)
def test_fast_runner_matches_literal_stepping(seed):
    _, table, machines = properties.random_machines(seed)
    compiled_table, address, _ = properties.typed_program(seed)
    cases = [(m, table) for m in machines] + [(compiled_table.lookup(address), compiled_table)]
    for m, t in cases:
        fuel = random.Random(seed).randint(0, 400)
        fast, slow = run(m, fuel, t), run(m, fuel, t, faithful=True)
        assert type(fast) is type(slow)
        assert fast.steps == slow.steps
        if isinstance(fast, Halted):
            assert fast.machine == slow.machine


@PROPERTY_SETTINGS
@given(SEEDS)
def test_steps_preserve_validity(seed):
    _, table, machines = properties.random_machines(seed)
    for m in machines:
        run(m, 200, table, check=True)


# ---------------------------------------------------------------- auxiliary machines

@pytest.mark.parametrize("n", range(1, 5))
def test_projection_law(n):
    table = AddressTable()
    pool = properties.address_pool(table)
    for i in range(1, n + 1):
        ds = [pool[(i * 3 + k) % len(pool)] for k in range(n)]
        start = table.lookup(table.apply_all(table.intern(eam.proj(n, i)), ds))
        assert reaches(start, table.lookup(ds[i - 1]), table)


@pytest.mark.parametrize("n", range(4))
def test_application_law(n):
    table = AddressTable()
    pool = properties.address_pool(table)
    a, b = table.intern(eam.proj(n + 1, n + 1)), pool[5]
    ds = pool[:n]
    start = table.lookup(table.apply_all(table.intern(eam.app_n(n)), [a, b, *ds]))
    target = table.apply_all(a, [*ds, table.apply_all(b, ds)])
    assert reaches(start, table.lookup(target), table)


@pytest.mark.parametrize("n", range(4))
@pytest.mark.parametrize("k", [0, 1, 5])
def test_arithmetic_laws(n, k):
    table = AddressTable()
    ds = [Num(j) for j in range(n)]
    a = constant(table, k, n)
    pred = run_address(table.apply_all(table.intern(eam.pred_n(n)), [a, *ds]), 1_000, table)
    succ = run_address(table.apply_all(table.intern(eam.succ_n(n)), [a, *ds]), 1_000, table)
    assert pred.numeral == max(k - 1, 0)
    assert succ.numeral == k + 1


@pytest.mark.parametrize("n", range(4))
@pytest.mark.parametrize("k", [0, 2])
def test_conditional_law(n, k):
    table = AddressTable()
    ds = [Num(j + 10) for j in range(n)]
    a, b, c = constant(table, k, n), constant(table, 7, n), constant(table, 8, n)
    start = table.lookup(table.apply_all(table.intern(eam.ifz_n(n)), [a, b, c, *ds]))
    parts = [table.apply_all(x, ds) for x in (a, b, c)]
    ready = Machine((*parts, *ds), (eam.Test(0, 1, 2, 0), Call(0)))
    assert reaches(start, ready, table)
    assert run(start, 1_000, table).numeral == (7 if k == 0 else 8)


# ---------------------------------------------------------------- fixpoints

@pytest.mark.parametrize("n", [0, 1, 2])
def test_fixpoint_unfolding(n):
    for seed in range(20):
        rng, table, machines = properties.random_machines(seed)
        m = table.intern(machines[-1])
        ds = [rng.choice(properties.address_pool(table)) for _ in range(n)]
        start = table.apply_all(FixN(n), [m, *ds])
        target = table.apply_all(m, [*ds, start])
        assert reaches(table.lookup(start), table.lookup(target), table, limit=4 * n + 8)


def test_y0_of_identity_unfolds_to_identity_applied_to_itself():
    table = AddressTable()
    i = table.intern(IDENTITY)
    start = table.apply(FixN(0), i)
    assert reaches(table.lookup(start), table.lookup(table.apply(i, start)), table)


# ---------------------------------------------------------------- interconvertibility

def test_interconvertible_examples():
    table = AddressTable()
    x = table.intern(SUCC1)
    assert interconvertible(x, x, 1, table)
    program = compile_program(parse_term(r"(\s n. s (s n)) (\x. succ x) 1"), table)
    assert interconvertible(program, Num(3), 10_000, table)
    assert not interconvertible(Num(2), Num(3), 100, table)


def test_interconvertible_meets_midway():
    table = AddressTable()
    a = table.apply_all(add(table), [Num(2), Num(1)])
    b = table.apply_all(add(table), [Num(1), Num(2)])
    result = interconvertible(a, b, 1_000, table)
    assert result and result.common is not None


def test_interconvertible_reports_exhausted_fuel():
    table = AddressTable()
    omega = table.apply(FixN(0), table.intern(IDENTITY))
    result = interconvertible(omega, Num(0), 50, table)
    assert not result and result.exhausted


# ---------------------------------------------------------------- dumps

def test_dump_lists_root_then_cells_in_order():
    table = AddressTable()
    root = table.apply(table.intern(SUCC1), Num(0))
    text = dump(root, table)
    lines = text.splitlines()
    assert lines[0] == format_machine(root, table.lookup(root))
    assert lines == [
        "machine cell:1 { regs=[_]; prog=LOAD 0;SUCC 0 0;CALL 0; tape=[num:0] }",
    ]


def test_dump_round_trip_through_a_fresh_table():
    source = parse_term(r"fix (\f x y. ifz y x (f (succ x) (pred y))) 3 2")
    first = AddressTable()
    text = dump(compile_program(source, first), first)
    second = AddressTable()
    root = load_dump(text, second)
    again = dump(root, second)
    third = AddressTable()
    assert dump(load_dump(again, third), third) == again
    assert len(again.splitlines()) == len(text.splitlines())
    assert run_address(root, 10_000, second).numeral == 5
    parsed_root, blocks = parse_dump(text)
    assert parsed_root == compile_program(source, first)
    assert len(blocks) == len(text.splitlines())
