import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from govsheet.errors import InvalidScope, PermissionDenied, UnknownGrant, UnknownPrincipal
from govsheet.model import ROLE_ACTIONS, Action, Role

from conftest import ADMIN, make_engine


def test_owner_may_release_live(world):
    decision = world.engine.access.authorize("owner", Action.RELEASE_LIVE)
    assert decision.allowed is True


def test_auditor_only_release_is_segregation_denial(world):
    decision = world.engine.access.authorize("auditor", Action.RELEASE_LIVE)
    assert decision.allowed is False
    assert decision.code == "SEGREGATION_ROLE"


def test_editor_only_audit_is_segregation_denial(world):
    decision = world.engine.access.authorize("editor", Action.AUDIT_DECIDE)
    assert decision.allowed is False
    assert decision.code == "SEGREGATION_ROLE"


def test_scoped_read_outside_grant_is_out_of_scope(world):
    decision = world.engine.access.authorize("user.ops", Action.READ_BUDGET, {world.dept_sales})
    assert decision.allowed is False
    assert decision.code == "OUT_OF_SCOPE"
    assert world.engine.access.authorize("user.ops", Action.READ_BUDGET, {world.dept_ops}).allowed


def test_no_grants_means_no_role(world):
    engine = world.engine
    engine.registry.create_principal(ADMIN, "Nobody", "nobody")
    for action in Action:
        decision = engine.access.authorize("nobody", action)
        assert decision.allowed is False
        assert decision.code in {"NO_ROLE", "SEGREGATION_ROLE"}
        assert decision.code == "NO_ROLE"  # no roles at all, so never segregation


def test_unknown_principal_raises(world):
    with pytest.raises(UnknownPrincipal):
        world.engine.access.authorize("ghost", Action.READ_BUDGET)
    with pytest.raises(UnknownPrincipal):
        world.engine.access.visible_departments("ghost")


def test_inactive_principal_fails_all_authorization(world):
    engine = world.engine
    engine.registry.set_principal_active(ADMIN, "user.ops", False)
    decision = engine.access.authorize("user.ops", Action.READ_BUDGET, {world.dept_ops})
    assert decision.allowed is False
    assert decision.code == "INACTIVE_PRINCIPAL"
    engine.registry.set_principal_active(ADMIN, "user.ops", True)
    assert engine.access.authorize("user.ops", Action.READ_BUDGET, {world.dept_ops}).allowed


def test_visible_departments_union_and_all(world):
    engine = world.engine
    assert engine.access.visible_departments("user.ops") == {world.dept_ops}
    # All-departments expands to every registered department.
    every = set(engine.store.table("department"))
    assert engine.access.visible_departments("senior") == every

    engine.registry.create_principal(ADMIN, "Nobody", "nobody")
    assert engine.access.visible_departments("nobody") == set()


def test_visible_departments_all_tracks_registry_growth(world):
    engine = world.engine
    before = engine.access.visible_departments("senior")
    new_dept = engine.registry.create_department(ADMIN, "New Dept").id
    after = engine.access.visible_departments("senior")
    assert after == before | {new_dept}


def test_grant_then_authorize_then_revoke(world):
    engine = world.engine
    engine.registry.create_principal(ADMIN, "Temp", "temp")
    assert not engine.access.authorize("temp", Action.READ_BUDGET).allowed
    grant = engine.access.grant(ADMIN, "temp", Role.USER, departments=[world.dept_ops])
    assert engine.access.authorize("temp", Action.READ_BUDGET, {world.dept_ops}).allowed
    engine.access.revoke(ADMIN, grant.id)
    assert not engine.access.authorize("temp", Action.READ_BUDGET).allowed


def test_grant_with_empty_explicit_scope_rejected(world):
    engine = world.engine
    with pytest.raises(InvalidScope):
        engine.access.grant(ADMIN, "user.ops", Role.USER, departments=[])


def test_duplicate_grants_collapse(world):
    engine = world.engine
    engine.registry.create_principal(ADMIN, "Temp", "temp")
    first = engine.access.grant(ADMIN, "temp", Role.USER, departments=[world.dept_ops])
    second = engine.access.grant(ADMIN, "temp", Role.USER, departments=[world.dept_ops, world.dept_sales])
    assert second.id == first.id
    grants = [g for g in engine.store.table("grant").values() if g.principal_id == "temp"]
    assert len(grants) == 1
    assert set(grants[0].departments) == {world.dept_ops, world.dept_sales}


def test_grant_requires_admin(world):
    with pytest.raises(PermissionDenied):
        world.engine.access.grant("owner", "user.ops", Role.USER, departments=[world.dept_ops])


def test_revoke_unknown_grant(world):
    with pytest.raises(UnknownGrant):
        world.engine.access.revoke(ADMIN, "G999")


def test_read_matrix_matches_grant_table_exhaustively(engine):
    """For every (principal, department), scoped ReadBudget decisions follow
    the documented rule: a data-reading role plus the department inside the
    principal's visible scope."""
    registry = engine.registry
    depts = [registry.create_department(ADMIN, f"Dept {i}").id for i in range(4)]
    engine.registry.create_principal(ADMIN, "P one", "p1")
    engine.registry.create_principal(ADMIN, "P two", "p2")
    engine.registry.create_principal(ADMIN, "P three", "p3")
    engine.access.grant(ADMIN, "p1", Role.USER, departments=[depts[0], depts[2]])
    engine.access.grant(ADMIN, "p2", Role.SENIOR_MANAGER, all_departments=True)
    engine.access.grant(ADMIN, "p3", Role.EDITOR, departments=[depts[1]])  # no data-reading role

    read_roles = {role for role, actions in ROLE_ACTIONS.items() if Action.READ_BUDGET in actions}
    for pid in ("p1", "p2", "p3"):
        grants = engine.access.grants_for(pid)
        holds_reader = any(g.role in read_roles for g in grants)
        visible = engine.access.visible_departments(pid)
        for dept in depts:
            expected = holds_reader and dept in visible
            assert engine.access.authorize(pid, Action.READ_BUDGET, {dept}).allowed is expected


@settings(max_examples=50, deadline=None)
@given(data=st.data())
def test_authorize_monotone_in_grants(data):
    """Adding a grant never turns an allowed decision into a denial."""
    engine = make_engine()
    dept_ids = [engine.registry.create_department(ADMIN, f"D{i}").id for i in range(3)]
    engine.registry.create_principal(ADMIN, "Subject", "subject")

    grant_strategy = st.tuples(
        st.sampled_from(list(Role)),
        st.booleans(),
        st.sets(st.sampled_from(dept_ids), min_size=1),
    )
    initial = data.draw(st.lists(grant_strategy, max_size=3))
    for role, all_depts, depts in initial:
        engine.access.grant(ADMIN, "subject", role, departments=None if all_depts else depts, all_departments=all_depts)

    action = data.draw(st.sampled_from(list(Action)))
    scope = data.draw(st.one_of(st.none(), st.sets(st.sampled_from(dept_ids))))
    before = engine.access.authorize("subject", action, scope)

    role, all_depts, depts = data.draw(grant_strategy)
    engine.access.grant(ADMIN, "subject", role, departments=None if all_depts else depts, all_departments=all_depts)
    after = engine.access.authorize("subject", action, scope)
    if before.allowed:
        assert after.allowed
