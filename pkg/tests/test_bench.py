import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qtsim import reference_data as ref
from qtsim.adders import AdderSpec
from qtsim.bench import (NONE, ExperimentConfig, case_inputs, effectiveness, improvement, normalize_attack,
                         output_probability, prepare, run_suite)
from qtsim.noise import NoiseParams
from qtsim.simcore import SimulationError
from qtsim.tenancy import DeviceModel, TenancyModel

SMALL = dict(npqa_sizes=(6,), qma=("qma:3", "qma:4", "qma:5"), attacks=(NONE, "EXISTING"), shots=4)


class TestMetrics:
    def test_case_inputs(self):
        assert case_inputs(AdderSpec.qfa(6)) == [(0, 0), (31, 31), (0, 31)]
        assert case_inputs(AdderSpec.qma(9)) == [(0, 0), (8, 8), (0, 8)]

    @pytest.mark.parametrize("base,attacked,want,tol", [(0.653, 0.62, 5.054, 0.001), (0.616, 0.356, 42.2, 0.1)])
    def test_effectiveness(self, base, attacked, want, tol):
        assert effectiveness(base, attacked) == pytest.approx(want, abs=tol)

    @pytest.mark.parametrize("npqa,pqa,want", [(0.833, 0.94, 12.8), (0.376, 0.878, 133.5)])
    def test_improvement(self, npqa, pqa, want):
        assert improvement(npqa, pqa) == pytest.approx(want, abs=0.1)

    def test_zero_base_rejected(self):
        with pytest.raises(SimulationError):
            effectiveness(0.0, 0.1)
        with pytest.raises(SimulationError):
            improvement(0.0, 0.1)

    @given(st.floats(0.01, 1.0), st.floats(0.0, 1.0))
    def test_effectiveness_sign(self, base, attacked):
        assert (effectiveness(base, attacked) > 0) == (attacked < base)

    @pytest.mark.parametrize("name,want", [("none", NONE), ("alt_cnot", "ALT_CNOT"), ("APC", "APC")])
    def test_normalize_attack(self, name, want):
        assert normalize_attack(name) == want


class TestExperimentConfig:
    def test_default_qma_covers_moduli_sets(self):
        cfg = ExperimentConfig()
        assert set(cfg.qma) == {"qma:3:2^n+1", "qma:4:2^n", "qma:5:2^n+1", "qma:7:2^n-1",
                                "qma:8:2^n", "qma:9:2^n+1"}

    def test_roundtrip(self):
        cfg = ExperimentConfig(shots=7, seed=3, noise=NoiseParams(p2=0.02), tenancy=TenancyModel.BLACK_BOX)
        again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert again == cfg
        assert again.config_hash() == cfg.config_hash()

    def test_overrides_win(self):
        cfg = ExperimentConfig.from_dict({"experiment": {"shots": 5, "seed": 1}}, seed=9)
        assert (cfg.shots, cfg.seed) == (5, 9)

    @pytest.mark.parametrize("data", [{"bogus": {}}, {"experiment": {"shot": 3}}, {"tenancy": {"kind": "grey"}},
                                      {"experiment": {"shots": 0}}])
    def test_rejects_bad_config(self, data):
        with pytest.raises(SimulationError):
            ExperimentConfig.from_dict(data)

    def test_none_tenancy_allows_only_no_attack(self):
        with pytest.raises(SimulationError):
            ExperimentConfig(tenancy=TenancyModel.NONE)
        ExperimentConfig(tenancy=TenancyModel.NONE, attacks=(NONE,))


class TestOutputProbability:
    @pytest.mark.parametrize("label", ["qfa:6", "qma:5", "qma:9"])
    @pytest.mark.parametrize("attack", [NONE, "APC"])
    def test_zero_noise_is_certain(self, label, attack):
        cfg = ExperimentConfig(noise=NoiseParams.ideal(), shots=5)
        result = output_probability(AdderSpec.parse(label), attack, cfg)
        assert result.case_probabilities == (1.0, 1.0, 1.0)

    def test_readout_coin_flip(self):
        # every output bit flips with probability 1/2, so each of the 4 outputs is equally likely
        cfg = ExperimentConfig(noise=NoiseParams.ideal().replace(p_meas=0.5), shots=2000,
                               tenancy=TenancyModel.NONE, attacks=(NONE,))
        result = output_probability(AdderSpec.qfa(2), NONE, cfg)
        se = math.sqrt(0.25 * 0.75 / result.trajectories)
        assert abs(result.mean - 0.25) < 4 * se

    def test_mean_is_arithmetic_mean_of_cases(self):
        cfg = ExperimentConfig(noise=NoiseParams(p2=0.05), shots=20)
        result = output_probability(AdderSpec.qfa(6), NONE, cfg)
        assert result.mean == pytest.approx(sum(result.case_probabilities) / 3)
        assert result.trajectories == 60

    def test_deterministic_for_seed(self):
        cfg = ExperimentConfig(noise=NoiseParams(p2=0.05), shots=15, seed=4)
        a = output_probability(AdderSpec.qfa(7), "SAC", cfg)
        b = output_probability(AdderSpec.qfa(7), "SAC", cfg)
        assert a == b

    def test_victim_measures_output_register_only(self):
        run = prepare(AdderSpec.qfa(6), "APC", NoiseParams())
        assert len(run.output_qubits) == 6
        assert set(run.output_qubits) <= set(run.victim_qubits)


@pytest.fixture(scope="module")
def golden_report():
    return run_suite(ExperimentConfig(golden=True))


@pytest.fixture(scope="module")
def small_report():
    return run_suite(ExperimentConfig(seed=2, **SMALL))


class TestGoldenSuite:
    @pytest.fixture
    def report(self, golden_report):
        return golden_report

    def test_improvement_cells(self, report):
        table = report.improvement_table()
        for n in (6, 7, 8, 9):
            for attack in ref.ATTACK_COLUMNS:
                assert table[n][attack] == pytest.approx(ref.improvement_cell(n, attack), abs=0.1), (n, attack)

    def test_pqa_cells_exact(self, report):
        table = report.pqa_table()
        for n in (6, 7, 8, 9):
            for attack in ref.ATTACK_COLUMNS:
                assert table[n][attack] == ref.pqa_probability(n, attack)

    def test_effectiveness_table(self, report):
        eff = report.effectiveness_table()
        assert eff["qfa:7"]["EXISTING"] == pytest.approx(5.054, abs=0.001)
        assert eff["qfa:8"]["APC"] == pytest.approx(42.2, abs=0.1)

    def test_series_shape(self, report):
        series = report.series()
        assert series["effectiveness"]["sizes"] == [6, 7, 8, 9]
        assert set(series["improvement"]["values"]) == set(ref.ATTACK_COLUMNS)


class TestReportOutput:
    @pytest.fixture
    def report(self, small_report):
        return small_report

    def test_byte_identical_reruns(self, report):
        again = run_suite(ExperimentConfig(seed=2, **SMALL))
        assert again.to_json() == report.to_json()
        assert again.to_csv() == report.to_csv()

    def test_worker_count_does_not_matter(self, report):
        pooled = run_suite(ExperimentConfig(seed=2, workers=2, **SMALL))
        assert pooled.to_json() == report.to_json()
        assert pooled.to_csv() == report.to_csv()

    @pytest.mark.parametrize("fmt", ["json", "csv"])
    def test_file_naming(self, report, tmp_path, fmt):
        path = report.write(tmp_path, fmt)
        assert path.name == f"report_seed2_{report.config.config_hash()}.{fmt}"
        assert path.read_text() == (report.to_json() if fmt == "json" else report.to_csv())

    def test_csv_rows(self, report):
        lines = report.to_csv().splitlines()
        assert lines[0] == "row,adder,attack,case,a,b,value,trajectories,seed"
        # 4 adders x 2 attacks x (3 cases + mean), plus effectiveness, pqa and improvement rows
        assert sum(line.startswith(("case,", "mean,")) for line in lines) == 32
        assert sum(line.startswith("pqa,") for line in lines) == 2

    def test_json_contains_seed_and_hash(self, report):
        data = json.loads(report.to_json())
        assert data["seed"] == 2
        assert data["config_hash"] == report.config.config_hash()

    def test_unknown_format(self, report, tmp_path):
        with pytest.raises(SimulationError):
            report.write(tmp_path, "xml")

    def test_device_too_small(self):
        with pytest.raises(SimulationError):
            run_suite(ExperimentConfig(device=DeviceModel(8), **SMALL))
