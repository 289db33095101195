import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eampcf import machine as eam
from eampcf.compile import compile_program
from eampcf.frontend import parse_term, parse_type
from eampcf.machine import IDENTITY, AddressTable, App, Call, Cell, FixN, Load, Machine, Num
from eampcf.machine_types import (
    Typed,
    Untypable,
    application_typing,
    check_machine,
    derivation,
    fix_schema,
    infer_machine,
)
from eampcf.syntax import INT, Arrow
from eampcf.typecheck import TVar, TypeCheckError, matches, show_type

import properties

SEEDS = st.integers(min_value=0, max_value=2**32)
PROPERTY_SETTINGS = settings(max_examples=300, deadline=None)

SUCC1 = Machine((None,), (Load(0), eam.Succ(0, 0), Call(0)))
ADD_AUX = Machine(
    (None,) * 5,
    (Load(0), Load(1), Load(2), eam.Pred(1, 3), eam.Succ(2, 4), App(0, 3, 0), App(0, 4, 0),
     eam.Test(1, 2, 0, 0), Call(0)),
)


def same_shape(a, b) -> bool:
    return matches(a, b) and matches(b, a)


def over(args, result):
    for a in reversed(args):
        result = Arrow(a, result)
    return result


_counter = iter(range(10**6, 2 * 10**6))


def tvars(k):
    return [TVar(next(_counter)) for _ in range(k)]


# ---------------------------------------------------------------- examples

def test_succ1_type_and_derivation():
    table = AddressTable()
    a = table.intern(SUCC1)
    assert str(infer_machine(a, table)) == "int -> int"
    tree = derivation(a, table)
    assert tree.rules() == ["R_∅", "R_()", "load_∅", "succ", "call"]
    assert tree.conclusion.endswith(": int -> int")
    assert "(succ)" in tree.render()


def test_successor_and_addition_machines():
    table = AddressTable()
    s = table.intern(SUCC1)
    succ2 = table.intern(Machine((None, None), (Load(0), Load(1), App(0, 1, 1), App(0, 1, 1), Call(1)), (s,)))
    assert check_machine(succ2, parse_type("int -> int"), table) is True
    add = table.apply(FixN(0), table.intern(ADD_AUX))
    assert check_machine(add, parse_type("int -> int -> int"), table) is True
    assert str(infer_machine(add, table)) == "int -> int -> int"


def test_reserved_addresses():
    table = AddressTable()
    assert infer_machine(Num(7), table) == Typed(INT)
    assert derivation(Num(7), table).rule == "nat"
    d, a = tvars(2)
    expected = Arrow(Arrow(d, Arrow(a, a)), Arrow(d, a))
    assert same_shape(infer_machine(FixN(1), table).principal, expected)
    for n in range(4):
        assert same_shape(infer_machine(FixN(n), table).principal, fix_schema(n))
    assert derivation(FixN(2), table).rule == "fix_2"


def test_identity_is_polymorphic_but_not_int():
    table = AddressTable()
    i = table.intern(IDENTITY)
    assert str(infer_machine(i, table)) == "?a -> ?a"
    assert check_machine(i, INT, table) is False
    assert check_machine(i, parse_type("(int -> int) -> int -> int"), table) is True


def test_application_typing_examples():
    assert application_typing(Arrow(INT, INT), INT) == INT
    (a,) = tvars(1)
    assert application_typing(Arrow(a, a), INT) == INT
    with pytest.raises(TypeCheckError):
        application_typing(INT, INT)


def test_untypable_reports():
    table = AddressTable()
    i = table.intern(IDENTITY)
    clash = infer_machine(table.intern(Machine((i,), (eam.Succ(0, 0), Call(0)))), table)
    assert isinstance(clash, Untypable) and clash.reason == "clash"
    shape = infer_machine(table.intern(Machine((Num(1), Num(2)))), table)
    assert isinstance(shape, Untypable) and shape.reason == "shape"
    # an error in a referenced machine is reported for its users too
    user = infer_machine(table.apply(table.intern(IDENTITY), table.intern(Machine((i,), (eam.Succ(0, 0), Call(0))))), table)
    assert not user


def test_guard_is_reported():
    table = AddressTable()
    a = compile_program(parse_term(r"fix (\f x y. ifz y x (f (succ x) (pred y))) 3 2"), table)
    report = infer_machine(a, table, guard=2)
    assert isinstance(report, Untypable) and report.reason == "guard-exhausted"


def test_hand_allocated_cycle_is_reported():
    table = AddressTable()
    loop = Cell(len(table.cells))
    table.cells.append(Machine.trusted((loop,), (Call(0),), ()))
    report = infer_machine(loop, table)
    assert isinstance(report, Untypable) and report.reason == "cycle"


def test_memo_is_coherent():
    table = AddressTable()
    a = compile_program(parse_term(r"(\s n. s (s n)) (\x. succ x)"), table)
    first = infer_machine(a, table)
    assert infer_machine(a, table) == first
    other = AddressTable()
    b = compile_program(parse_term(r"(\s n. s (s n)) (\x. succ x)"), other)
    assert same_shape(infer_machine(b, other).principal, first.principal)


@PROPERTY_SETTINGS
@given(SEEDS)
def test_memo_is_coherent_on_random_machines(seed):
    _, table, machines = properties.random_machines(seed)
    reports = [infer_machine(table.intern(m), table) for m in machines]
    assert [infer_machine(table.intern(m), table) for m in machines] == reports


# ---------------------------------------------------------------- auxiliary machines

@pytest.mark.parametrize("n", range(5))
def test_auxiliary_machines_have_their_schemas(n):
    table = AddressTable()
    deltas = tvars(n)
    alpha, beta = tvars(2)

    def lifted(ty):
        return over(deltas, ty)

    for i in range(1, n + 1):
        expected = over(deltas, deltas[i - 1])
        assert same_shape(infer_machine(table.intern(eam.proj(n, i)), table).principal, expected)
    app = over([lifted(Arrow(alpha, beta)), lifted(alpha)], lifted(beta))
    assert same_shape(infer_machine(table.intern(eam.app_n(n)), table).principal, app)
    arith = Arrow(lifted(INT), lifted(INT))
    assert same_shape(infer_machine(table.intern(eam.pred_n(n)), table).principal, arith)
    assert same_shape(infer_machine(table.intern(eam.succ_n(n)), table).principal, arith)
    ifz = over([lifted(INT), lifted(alpha), lifted(alpha)], lifted(alpha))
    assert same_shape(infer_machine(table.intern(eam.ifz_n(n)), table).principal, ifz)


@pytest.mark.parametrize("n", range(5))
def test_auxiliary_machines_check_at_sampled_instances(n):
    rng = random.Random(n)
    table = AddressTable()
    for _ in range(10):
        deltas = [rng.choice(properties.SMALL_TYPES) for _ in range(n)]
        alpha = rng.choice(properties.SMALL_TYPES)
        lifted = lambda ty: over(deltas, ty)  # noqa: E731
        assert check_machine(table.intern(eam.succ_n(n)), Arrow(lifted(INT), lifted(INT)), table) is True
        ifz = over([lifted(INT), lifted(alpha), lifted(alpha)], lifted(alpha))
        assert check_machine(table.intern(eam.ifz_n(n)), ifz, table) is True
        if n:
            assert check_machine(table.intern(eam.proj(n, n)), over(deltas, deltas[-1]), table) is True


# ---------------------------------------------------------------- properties

@PROPERTY_SETTINGS
@given(SEEDS)
def test_subject_reduction(seed):
    properties.check_subject_reduction(seed)


@PROPERTY_SETTINGS
@given(SEEDS)
def test_typed_machines_never_err(seed):
    properties.check_no_errors(seed)


@PROPERTY_SETTINGS
@given(SEEDS)
def test_int_typed_final_machines_are_numerals(seed):
    properties.check_int_final_is_numeral(seed)


@PROPERTY_SETTINGS
@given(SEEDS)
def test_application_typing_agrees_with_inference(seed):
    _, table, machines = properties.random_machines(seed)
    pool = properties.address_pool(table)
    rng = random.Random(seed)
    for m in machines:
        a = table.intern(m)
        fun = infer_machine(a, table)
        b = rng.choice(pool)
        arg = infer_machine(b, table)
        applied = infer_machine(table.apply(a, b), table)
        if fun and arg:
            try:
                predicted = application_typing(fun.principal, arg.principal)
            except TypeCheckError:
                continue
            assert applied
            assert matches(applied.principal, predicted)


def test_show_type_names_variables_in_order():
    a, b = tvars(2)
    assert show_type(Arrow(b, Arrow(a, b))) == "?a -> ?b -> ?a"
