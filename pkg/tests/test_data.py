import numpy as np
import pytest

from abae.data import (
    BudgetExceededError,
    ColumnSchema,
    ConfigError,
    Dataset,
    OracleLedger,
    QueryConfig,
    SchemaError,
    ValidationError,
    load_dataset,
    oracle_eval,
    write_dataset,
)

SCHEMA = ColumnSchema(statistic="v", labels={"pred": "o"}, proxies={"pred": "s"})


def write_rows(path, rows, header="v,o,s"):
    path.write_text("\n".join([header, *rows]) + "\n")
    return path


def tiny_dataset(labels=(1, 0, 1), proxies=(0.1, 0.5, 0.9), values=(1.0, 2.0, 3.0)):
    return Dataset(
        statistics=np.array(values),
        oracle_labels={"pred": np.array(labels, dtype=bool)},
        proxy_scores={"pred": np.array(proxies)},
    )


class TestLoad:
    def test_identity_ingestion(self, tmp_path):
        p = write_rows(tmp_path / "d.csv", ["1.0,1,0.1", "2.0,0,0.5", "3.0,1,0.9"])
        ds = load_dataset(p, SCHEMA)
        assert ds.n == 3
        assert [r.id for r in ds] == [0, 1, 2]
        np.testing.assert_allclose(ds.statistics, [1.0, 2.0, 3.0])
        np.testing.assert_allclose(ds.proxy("pred"), [0.1, 0.5, 0.9])
        assert ds.record(1).oracle_labels == {"pred": False}

    def test_proxy_out_of_range_names_row(self, tmp_path):
        p = write_rows(tmp_path / "d.csv", ["1.0,1,0.1", "2.0,0,1.5"])
        with pytest.raises(ValidationError, match="row 1"):
            load_dataset(p, SCHEMA)

    def test_non_finite_statistic_rejected(self, tmp_path):
        p = write_rows(tmp_path / "d.csv", ["nan,1,0.1"])
        with pytest.raises(ValidationError, match="non-finite"):
            load_dataset(p, SCHEMA)

    def test_missing_column_is_schema_error(self, tmp_path):
        p = write_rows(tmp_path / "d.csv", ["1.0,1"], header="v,o")
        with pytest.raises(SchemaError, match="missing columns"):
            load_dataset(p, SCHEMA)

    def test_label_must_be_binary(self, tmp_path):
        p = write_rows(tmp_path / "d.csv", ["1.0,2,0.1"])
        with pytest.raises(ValidationError, match="not in {0,1}"):
            load_dataset(p, SCHEMA)

    def test_unparseable_cell_names_row_and_column(self, tmp_path):
        p = write_rows(tmp_path / "d.csv", ["1.0,1,0.1", "oops,0,0.2"])
        with pytest.raises(ValidationError, match="row 1"):
            load_dataset(p, SCHEMA)

    def test_tab_delimited(self, tmp_path):
        schema = ColumnSchema(
            statistic="v", labels={"pred": "o"}, proxies={"pred": "s"}, delimiter="\t"
        )
        p = (tmp_path / "d.tsv")
        p.write_text("v\to\ts\n1.0\t1\t0.25\n")
        ds = load_dataset(p, schema)
        assert ds.n == 1 and ds.proxy("pred")[0] == 0.25

    def test_write_then_load_round_trips(self, tmp_path):
        p = write_rows(tmp_path / "d.csv", ["1.5,1,0.125", "2.25,0,0.5", "-3.0,1,0.875"])
        ds = load_dataset(p, SCHEMA)
        out1 = tmp_path / "out1.csv"
        out2 = tmp_path / "out2.csv"
        write_dataset(ds, out1, SCHEMA)
        ds2 = load_dataset(out1, SCHEMA)
        np.testing.assert_array_equal(ds.statistics, ds2.statistics)
        np.testing.assert_array_equal(ds.oracle_labels["pred"], ds2.oracle_labels["pred"])
        np.testing.assert_array_equal(ds.proxy_scores["pred"], ds2.proxy_scores["pred"])
        # A second write of the re-loaded dataset is byte-identical.
        write_dataset(ds2, out2, SCHEMA)
        assert out1.read_bytes() == out2.read_bytes()


class TestDatasetInvariants:
    def test_wrong_column_length_rejected(self):
        with pytest.raises(ValidationError):
            Dataset(
                statistics=np.array([1.0, 2.0]),
                oracle_labels={"pred": np.array([True])},
                proxy_scores={"pred": np.array([0.1, 0.2])},
            )

    def test_record_view(self):
        ds = tiny_dataset()
        rec = ds.record(2)
        assert rec.statistic == 3.0
        assert rec.proxy_scores == {"pred": 0.9}
        with pytest.raises(IndexError):
            ds.record(3)


class TestOracleLedger:
    def test_single_call_charges_once(self):
        ds = tiny_dataset(labels=(1, 0, 1))
        ledger = OracleLedger(10, ["pred"], ds.n)
        assert oracle_eval(ledger, ds.record(0), "pred") is True
        assert ledger.calls_made == 1
        assert ledger.per_predicate_calls == {"pred": 1}

    def test_repeat_call_is_cached(self):
        ds = tiny_dataset()
        ledger = OracleLedger(10, ["pred"], ds.n)
        oracle_eval(ledger, ds.record(0), "pred")
        assert oracle_eval(ledger, ds.record(0), "pred") is True
        assert ledger.calls_made == 1

    def test_budget_exhaustion_raises(self):
        ds = tiny_dataset()
        ledger = OracleLedger(1, ["pred"], ds.n)
        oracle_eval(ledger, ds.record(0), "pred")
        with pytest.raises(BudgetExceededError) as err:
            oracle_eval(ledger, ds.record(1), "pred")
        assert err.value.ledger.calls_made == 1

    def test_bulk_charge_counts_fresh_ids_only(self):
        ledger = OracleLedger(5, ["pred"], 10)
        ledger.charge("pred", np.array([0, 1, 2]))
        ledger.charge("pred", np.array([2, 3]))
        assert ledger.calls_made == 4
        assert ledger.remaining == 1

    def test_multi_predicate_expression_charges_each_base(self):
        ds = Dataset(
            statistics=np.array([1.0]),
            oracle_labels={"a": np.array([True]), "b": np.array([False])},
            proxy_scores={},
        )
        ledger = OracleLedger(10, ["a", "b"], 1)
        assert oracle_eval(ledger, ds.record(0), "a AND NOT b") is True
        assert ledger.calls_made == 2
        assert ledger.per_predicate_calls == {"a": 1, "b": 1}


class TestQueryConfig:
    def test_defaults_are_valid(self):
        cfg = QueryConfig()
        assert cfg.aggregate == "AVG" and cfg.num_strata == 5

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"aggregate": "MAX"},
            {"budget_total": 0},
            {"stage1_fraction": 0.0},
            {"stage1_fraction": 1.0},
            {"num_strata": 0},
            {"alpha": 1.0},
            {"bootstrap_trials": 0},
        ],
    )
    def test_invalid_configs_rejected(self, kwargs):
        with pytest.raises(ConfigError):
            QueryConfig(**kwargs)

    def test_predicate_expr_parses_strings(self):
        cfg = QueryConfig(predicate="a AND b")
        assert cfg.predicate_expr() == QueryConfig(predicate=cfg.predicate_expr()).predicate_expr()
