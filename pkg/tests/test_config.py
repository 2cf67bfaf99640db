import pytest

from conflictmask.config import (
    ConfigError,
    config_text_from_effective,
    default_conflict_ratios,
    load_config,
)
from conflictmask.formats import fmt_float, metrics_csv_text, to_json


def test_defaults_resolve():
    cfg = load_config("")
    assert cfg.n_tasks == 4
    assert cfg.strategy == "soco"
    assert cfg.lam == 1.0
    assert cfg.alpha == 20.0
    assert (cfg.q1, cfg.q3) == (0.05, 0.95)
    assert (cfg.beta_left_max, cfg.beta_right_max, cfg.beta_min) == (20.0, 30.0, 5.0)
    assert cfg.init_sparsity == 0.2
    assert cfg.hard_sparsity == 0.2
    assert len(cfg.conflict_ratios) == 4


def test_default_ratios_span():
    ratios = default_conflict_ratios(7)
    assert ratios[0] == 0.10 and ratios[-1] == 0.40
    assert all(a < b for a, b in zip(ratios, ratios[1:]))
    assert default_conflict_ratios(1) == [0.0]


def test_file_text_parsing_with_comments():
    cfg = load_config("# a comment\n\nn_tasks = 2\nseed=9\nconflict_ratios = 0.1, 0.3\n")
    assert cfg.n_tasks == 2
    assert cfg.seed == 9
    assert cfg.conflict_ratios == [0.1, 0.3]


def test_unknown_key_names_line():
    with pytest.raises(ConfigError) as exc:
        load_config("n_tasks = 2\nfoo = 1\nconflict_ratios=0.1,0.1\n")
    assert any("line 2" in d and "foo" in d for d in exc.value.diagnostics)


def test_bad_value_names_line_and_key():
    with pytest.raises(ConfigError) as exc:
        load_config("epochs = soon\n")
    assert any("line 1" in d and "epochs" in d for d in exc.value.diagnostics)


def test_missing_equals_flagged():
    with pytest.raises(ConfigError) as exc:
        load_config("epochs\n")
    assert any("key = value" in d for d in exc.value.diagnostics)


def test_override_applies_after_file():
    cfg = load_config("seed = 1\n", ["seed=42", "lr=0.5"])
    assert cfg.seed == 42
    assert cfg.lr == 0.5


def test_override_errors_are_tagged():
    with pytest.raises(ConfigError) as exc:
        load_config("", ["nope=3"])
    assert any("override" in d and "nope" in d for d in exc.value.diagnostics)


@pytest.mark.parametrize("overrides,needle", [
    (["q1=0.9", "q3=0.5"], "q1"),
    (["strategy=warp"], "unknown strategy"),
    (["strategy=soco,soco"], "duplicates"),
    (["n_tasks=3", "conflict_ratios=0.1,0.2"], "entries"),
    (["lr=0"], "lr"),
    (["init_sparsity=1.0"], "init_sparsity"),
    (["beta_min=99"], "beta_min"),
    (["model=cnn"], "model"),
])
def test_validation_errors(overrides, needle):
    with pytest.raises(ConfigError) as exc:
        load_config("", overrides)
    assert any(needle in d for d in exc.value.diagnostics)


def test_effective_round_trips_through_text():
    cfg = load_config("", ["n_tasks=3", "conflict_ratios=0.17,0.23,0.31", "lr=0.037"])
    eff = cfg.effective_dict()
    text = config_text_from_effective(eff)
    again = load_config(text)
    assert again.effective_dict() == eff


def test_fmt_float_round_trips():
    for v in (0.1, 1.0 / 3.0, 2.0 ** -40, 12345.6789, -0.0):
        assert float(fmt_float(v)) == v


def test_json_emitter_is_deterministic_and_parseable():
    import json

    doc = {"a": 0.1, "b": [1, 2.5, True, None], "c": {"x": "s"}}
    text = to_json(doc)
    assert text == to_json(doc)
    parsed = json.loads(text)
    assert parsed["a"] == 0.1
    assert parsed["b"] == [1, 2.5, True, None]


def test_metrics_csv_shape():
    rows = [(1, 0, 0.5, None, None, None, None, None, None, "none")]
    text = metrics_csv_text(rows)
    lines = text.splitlines()
    assert lines[0].startswith("step,task_id,loss,sparsity,beta_t")
    assert lines[1] == "1,0,0.5,,,,,,,none"
