import shutil

import pytest

from persite import build_program, load_composite, save_program

import helpers


@pytest.fixture(scope="session")
def senator_graph():
    return helpers.senator_graph()


@pytest.fixture(scope="session")
def senator_program(senator_graph):
    program, _refs = build_program(senator_graph)
    return program


@pytest.fixture(scope="session")
def bev_graph():
    return helpers.bev_graph()


@pytest.fixture(scope="session")
def bev_program(bev_graph):
    program, _refs = build_program(bev_graph)
    return program


@pytest.fixture(scope="session")
def catalog_graph():
    return helpers.catalog_graph()


@pytest.fixture(scope="session")
def cascade_dir(tmp_path_factory):
    """Cascade fixture dir with programs built beside the manifest."""
    target = tmp_path_factory.mktemp("cascade")
    for name in ("manifest.json", "rules.json", "norm.json"):
        shutil.copy(helpers.fixture_path("cascade", name), target / name)
    for stage in ("recommender", "taxonomy", "repository"):
        program, _refs = build_program(helpers.cascade_graph(stage))
        save_program(program, target / f"{stage}.prog.json")
    return target


@pytest.fixture(scope="session")
def cascade_composite(cascade_dir):
    return load_composite(cascade_dir / "manifest.json")


@pytest.fixture(scope="session")
def bev_dir(tmp_path_factory):
    """Single-stage composite over the community-directory fixture."""
    target = tmp_path_factory.mktemp("bev")
    shutil.copy(helpers.fixture_path("bev_rules.json"), target / "rules.json")
    shutil.copy(helpers.fixture_path("bev_norm.json"), target / "norm.json")
    program, _refs = build_program(helpers.bev_graph())
    save_program(program, target / "bev.prog.json")
    helpers.write_json(
        target / "manifest.json",
        {
            "stages": [{"name": "bev", "program": "bev.prog.json"}],
            "aliases": "rules.json",
            "binding_aliases": [],
            "report": [],
        },
    )
    helpers.write_json(
        target / "manifest_noalias.json",
        {
            "stages": [{"name": "bev", "program": "bev.prog.json"}],
            "binding_aliases": [],
            "report": [],
        },
    )
    return target
