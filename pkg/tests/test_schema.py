import pytest
from pydantic import ValidationError

from db.enums import ExperimentKind
from ergodic.arith import GOLDEN_GAMMA
from ergodic.errors import ConfigError
from ergodic.systems import BernoulliShiftSystem, CylinderObservable, ProductSystem, TorusRotationSystem
from runner.schema import (
    ExperimentConfig,
    FamilySpec,
    ScheduleSpec,
    WeightSequenceSpec,
    build_family,
    build_observables,
    build_schedule,
    build_system,
    build_weight_sequence,
    format_validation_error,
    require_blocks,
    resolve_weights,
    to_fixed_point,
)

BERNOULLI = {"type": "bernoulli", "d": 2, "prob": ["1/2", "1/2"]}


def experiment(**fields) -> ExperimentConfig:
    data = {"kind": "cesaro", "system": BERNOULLI, "family": {"columns": [[[0, 1], [0, 0]]]},
            "observables": [{"type": "constant"}], "schedule": {"checkpoints": [10]}}
    data.update(fields)
    return ExperimentConfig.model_validate(data)


def validation_lines(data: dict) -> list[str]:
    with pytest.raises(ValidationError) as info:
        ExperimentConfig.model_validate(data)
    return format_validation_error(info.value)


def test_unknown_fields_are_rejected():
    lines = validation_lines({"kind": "cesaro", "bogus": 1})
    assert any(line.startswith("bogus: ") for line in lines)


def test_unknown_kind_is_rejected():
    lines = validation_lines({"kind": "spectral"})
    assert any(line.startswith("kind: ") for line in lines)


def test_nested_paths_are_reported():
    lines = validation_lines({"kind": "cesaro", "system": {"type": "bernoulli", "d": 0, "prob": ["1/2", "1/2"]}})
    assert any(line.startswith("system.bernoulli.d: ") for line in lines)
    lines = validation_lines({"kind": "cesaro", "system": {"type": "bernoulli", "d": 1, "prob": ["1/2", "a/b"]}})
    assert any("system.bernoulli.prob" in line for line in lines)


def test_seed_range():
    validation_lines({"kind": "verify_past", "master_seed": 1 << 64})
    assert experiment(master_seed=(1 << 64) - 1).master_seed == (1 << 64) - 1


def test_schedule_needs_exactly_one_form():
    with pytest.raises(ValidationError):
        ScheduleSpec.model_validate({})
    with pytest.raises(ValidationError):
        ScheduleSpec.model_validate({"checkpoints": [1], "geometric": {"start": 1, "stop": 8}})
    assert build_schedule(ScheduleSpec(geometric={"start": 1, "stop": 8})).checkpoints == (1, 2, 4, 8)


def test_schedule_errors_carry_the_path():
    with pytest.raises(ConfigError) as info:
        build_schedule(ScheduleSpec(checkpoints=[10, 5]))
    assert info.value.field_path == "schedule"
    with pytest.raises(ConfigError):
        build_schedule(ScheduleSpec(checkpoints=[10 ** 8]))


def test_degree_cap_names_the_entry():
    spec = FamilySpec(columns=[[[0, 1]], [[0, 0, 0, 0, 0, 0, 0, 1]]])
    with pytest.raises(ConfigError) as info:
        build_family(spec, 1)
    assert info.value.field_path == "family.columns.1.0"
    assert str(info.value).startswith("family.columns.1.0: degree 7")


def test_ragged_family_names_the_column():
    with pytest.raises(ConfigError) as info:
        build_family(FamilySpec(columns=[[[0, 1], [0, 1]], [[0, 1]]]), 2)
    assert info.value.field_path == "family.columns.1"


def test_fixed_point_coordinates():
    assert to_fixed_point("1/2", "x") == 1 << 63
    assert to_fixed_point(0.5, "x") == 1 << 63
    assert to_fixed_point("golden", "x") == GOLDEN_GAMMA
    assert to_fixed_point(12345, "x") == 12345
    assert to_fixed_point("1", "x", allow_one=True) == 1 << 64
    for bad in ("1", 1.5, "-1/3", "half"):
        with pytest.raises(ConfigError):
            to_fixed_point(bad, "x")


def test_systems_are_built():
    assert isinstance(build_system(experiment()), BernoulliShiftSystem)
    torus = experiment(system={"type": "torus", "d": 1, "k": 2, "alphas": [["golden", "1/3"]]})
    system = build_system(torus)
    assert isinstance(system, TorusRotationSystem)
    assert system.alphas == ((GOLDEN_GAMMA, (1 << 64) // 3),)
    product = experiment(system={"type": "product", "first": BERNOULLI,
                                 "second": {"type": "torus", "d": 2, "k": 1, "alphas": [[0.25], [0.5]]}})
    system = build_system(product)
    assert isinstance(system, ProductSystem)
    assert system.second.master_seed != system.first.master_seed


def test_system_shape_errors():
    with pytest.raises(ConfigError) as info:
        build_system(experiment(system={"type": "torus", "d": 2, "k": 1, "alphas": [[0.25]]}))
    assert info.value.field_path == "system.alphas"
    with pytest.raises(ConfigError) as info:
        build_system(experiment(system={"type": "bernoulli", "d": 1, "prob": ["1/2", "1/3"]}))
    assert info.value.field_path == "system.prob"


def test_observables_are_checked_against_the_system():
    cfg = experiment(observables=[{"type": "box", "lows": [0], "highs": ["1/2"]}])
    with pytest.raises(ConfigError) as info:
        build_observables(cfg, build_system(cfg))
    assert info.value.field_path == "observables.0.type"

    cfg = experiment(observables=[{"type": "constant"}, {"type": "cylinder", "window": [[0, 0]], "table": [1, 2, 3]}])
    with pytest.raises(ConfigError) as info:
        build_observables(cfg, build_system(cfg))
    assert info.value.field_path == "observables.1.table"

    cfg = experiment(observables=[{"type": "indicator", "window": [[0, 0], [0, 1]], "symbols": [1, 2]}])
    with pytest.raises(ConfigError) as info:
        build_observables(cfg, build_system(cfg))
    assert info.value.field_path == "observables.0.symbols.1"


def test_cylinder_tables_are_row_major():
    cfg = experiment(observables=[{"type": "cylinder", "window": [[0, 0], [1, 0]], "table": ["0", "1/3", 2, 3]}])
    (f,) = build_observables(cfg, build_system(cfg))
    assert isinstance(f, CylinderObservable)
    assert f.exact
    assert f.value_at([0, 1]) == f.table[0, 1]
    assert str(f.value_at([0, 1])) == "1/3"


def test_weight_sequences():
    assert build_weight_sequence(WeightSequenceSpec(type="periodic", pattern=[1, 0])).mean == 0.5
    assert build_weight_sequence(WeightSequenceSpec(type="alternating")).bound == 1.0
    with pytest.raises(ConfigError) as info:
        build_weight_sequence(WeightSequenceSpec(type="table"))
    assert info.value.field_path == "weight_sequence.values"


def test_resolve_weights():
    family = build_family(FamilySpec(columns=[[[0, 0, 3], [0, 0, 8]], [[0, 0, 1], [0, 0, -1]]]))
    weights, selection = resolve_weights("auto", family, 2)
    assert weights.weights == (1, 2) and selection.n2 == 0
    weights, selection = resolve_weights([1, 5], family, 2)
    assert weights.weights == (1, 5) and selection is None
    with pytest.raises(ConfigError):
        resolve_weights([1], family, 2)
    with pytest.raises(ConfigError):
        resolve_weights([1, 0], family, 2)
    degenerate = build_family(FamilySpec(columns=[[[0, 1], [0, 2]], [[0, 1], [0, 2]]]))
    with pytest.raises(ConfigError) as info:
        resolve_weights("auto", degenerate, 2)
    assert info.value.field_path == "family"


def test_required_blocks():
    with pytest.raises(ConfigError) as info:
        require_blocks(ExperimentConfig(kind=ExperimentKind.WEIGHTED, system=BERNOULLI,
                                        family={"columns": [[[0, 1], [0, 0]]]}, schedule={"checkpoints": [1]},
                                        observables=[{"type": "constant"}]))
    assert info.value.field_path == "weight_sequence"
    with pytest.raises(ConfigError) as info:
        require_blocks(experiment(observables=[]))
    assert info.value.field_path == "observables"
    require_blocks(ExperimentConfig(kind=ExperimentKind.VERIFY_PAST, verify_past={"weights": [1], "box_radius": 2}))


def test_echo_round_trips():
    cfg = experiment(tolerances={"eps": 0.02}, expected_limit="1/2")
    echo = cfg.echo()
    assert echo["expected_limit"] == "1/2"
    assert ExperimentConfig.model_validate(echo) == cfg
