import json

import pytest
from _util import run_analysis

from lambdaq.cfg import build_cfg
from lambdaq.desugar import compile_source
from lambdaq.errors import DuplicateModel, LambdaQError, ModelArityError
from lambdaq.machine import Machine
from lambdaq.models import ArgAlt, IOModel, ModelRegistry, default_registry, parse_spec


def test_builtin_models():
    reg = default_registry()
    assert reg.names() == ["fs.open", "fs.readFile", "http.get"]
    assert reg.get("fs.open").callback_index == 3
    assert "fs.readFile" in reg and "fs.write" not in reg


def test_parse_spec_grammar():
    assert parse_spec("undef|null") == [ArgAlt("undef"), ArgAlt("null")]
    assert parse_spec("num:2") == [ArgAlt("num", 2)]
    assert parse_spec("num:2.5") == [ArgAlt("num", 2.5)]
    assert parse_spec("str:hi") == [ArgAlt("str", "hi")]
    (obj,) = parse_spec("object:a=anynum,b=str:x")
    assert obj.kind == "object"
    assert obj.fields == (("a", ArgAlt("anynum")), ("b", ArgAlt("str", "x")))


@pytest.mark.parametrize("bad", ["nope", "object:a", "object:a=object:b=null"])
def test_bad_specs(bad):
    with pytest.raises(LambdaQError):
        parse_spec(bad)


def test_negative_callback_index():
    with pytest.raises(LambdaQError):
        IOModel("x.y", -1, [])


def test_branches_repeat_last_alternative():
    m = IOModel("x.y", 0, ["error|undef|undef", "undef|anystr"])
    assert [tuple(a.kind for a in b) for b in m.branches()] == [
        ("error", "undef"), ("undef", "anystr"), ("undef", "anystr"),
    ]
    assert IOModel("x.z", 0, []).branches() == [()]


def test_duplicate_model():
    reg = default_registry()
    with pytest.raises(DuplicateModel):
        reg.register(IOModel("fs.open", 0, []))


def _write_models(tmp_path, data):
    (tmp_path / "db.json").write_text(json.dumps(data))
    reg = default_registry()
    reg.load_dir(tmp_path)
    return reg


def test_load_dir(tmp_path):
    reg = _write_models(tmp_path, [{"name": "db.query", "callbackParamIndex": 1, "argSpecs": ["null|error", "num:7"]}])
    assert reg.get("db.query").callback_index == 1
    with pytest.raises(DuplicateModel):
        reg.load_dir(tmp_path)


def test_custom_model_drives_interpreter_and_analysis(tmp_path):
    reg = _write_models(tmp_path, {"name": "db.query", "callbackParamIndex": 1, "argSpecs": ["null|error", "num:7"]})
    src = 'db.query("q", function cb(err, n){ var k = err.message; });'
    prog = build_cfg(compile_source(src, reg))
    run = Machine(prog, reg).explore(64)
    concrete = {e["error"] for t in run.traces for e in t.to_json() if e["kind"] == "TypeError"}
    assert concrete == {"PropertyAccessOnNullish"}
    with pytest.raises(ModelArityError):
        compile_source('db.query("q");', reg)


def test_unknown_model_without_registry_is_havoc():
    prog = compile_source('db.query("q", function cb(){});', ModelRegistry())
    assert any("unknown builtin" in d for d in prog.diagnostics)


def test_builtin_model_abstract_args_cover_concrete():
    src = 'fs.readFile("f", function cb(err, data){ var n = data.length; });'
    res = run_analysis(src)
    # data may be undefined on the error branch
    assert any(e.kind == "PropertyAccessOnNullish" for e in res.type_errors)
