"""Shared fixtures: desk schemas, SQLite databases, fake provider."""

from __future__ import annotations

import json
import sqlite3
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for `support`

from solidql.schema import load_tables_json

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def schemas():
    return load_tables_json(FIXTURES / "tables.json")


@pytest.fixture(scope="session")
def parser_corpus():
    return json.loads((FIXTURES / "parser_corpus.json").read_text())


@pytest.fixture(scope="session")
def linking_labels():
    return json.loads((FIXTURES / "linking_labels.json").read_text())


@pytest.fixture(scope="session")
def shop_dataset():
    return json.loads((FIXTURES / "shop_dataset.json").read_text())


@pytest.fixture(scope="session")
def shop_pool():
    return json.loads((FIXTURES / "shop_pool.json").read_text())


def _create(path: Path, statements: list[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    connection = sqlite3.connect(path)
    for statement in statements:
        connection.execute(statement)
    connection.commit()
    connection.close()


@pytest.fixture(scope="session")
def databases_root(tmp_path_factory) -> Path:
    """`database/<db_id>/<db_id>.sqlite` tree with the desk data."""
    root = tmp_path_factory.mktemp("databases")
    _create(
        root / "concert_singer" / "concert_singer.sqlite",
        [
            "CREATE TABLE stadium (stadium_id int, location text, name text, capacity int, average int)",
            "CREATE TABLE singer (singer_id int, name text, country text, song_name text, age int)",
            "CREATE TABLE concert (concert_id int, concert_name text, theme text, stadium_id int, year int)",
            "CREATE TABLE singer_in_concert (concert_id int, singer_id int)",
            "INSERT INTO stadium VALUES (1,'London','Olympic',80000,5000),(2,'Paris','Stade',60000,4000),(3,'Berlin','Arena',50000,3000)",
            "INSERT INTO singer VALUES (1,'Ann','US','Song A',25),(2,'Bob','UK','Song B',40),(3,'Cara','US','Song C',33),(4,'Dan','France','Song D',19),(5,'Eve','UK','Song E',30)",
            "INSERT INTO concert VALUES (1,'Summer Fest','pop',1,2014),(2,'Winter Gala','rock',2,2014),(3,'Spring Show','jazz',1,2015)",
            "INSERT INTO singer_in_concert VALUES (1,1),(1,2),(2,2),(3,3)",
        ],
    )
    _create(
        root / "shop" / "shop.sqlite",
        [
            "CREATE TABLE employee (employee_id int, name text, age int, city text)",
            "CREATE TABLE shop (shop_id int, name text, location text, number_products int)",
            "CREATE TABLE hiring (shop_id int, employee_id int, start_from text, is_full_time text)",
            "INSERT INTO employee VALUES (1,'Alice',30,'Berlin'),(2,'Bob',45,'Paris'),(3,'Carol',28,'Berlin'),(4,'Dave',52,'Rome')",
            "INSERT INTO shop VALUES (1,'North Store','Berlin',120),(2,'South Store','Paris',80),(3,'East Store','Rome',150)",
            "INSERT INTO hiring VALUES (1,1,'2019','T'),(1,3,'2020','F'),(2,2,'2018','T'),(3,4,'2021','T')",
        ],
    )
    return root


@pytest.fixture()
def concert_db(databases_root) -> Path:
    return databases_root / "concert_singer" / "concert_singer.sqlite"


@pytest.fixture()
def shop_db(databases_root) -> Path:
    return databases_root / "shop" / "shop.sqlite"
