import csv
import json
import math

import numpy as np
import pytest
from scipy import stats as sps

from bayesvf.harness import cli
from bayesvf.harness import runner as runner_mod
from bayesvf.harness.config import CONFIG_KEYS, ConfigError, ExperimentConfig, load_config
from bayesvf.harness.records import CSV_COLUMNS, RunRecord, read_csv, seed_csvs, write_csv
from bayesvf.harness.runner import run_experiment, sweep
from bayesvf.harness.stats import DegenerateVarianceError, standard_error, summarize, welch_ttest

from oracles import WELCH_REFERENCE

TINY = dict(algorithm="ppo", mode="alpha-bnn", env="pointmass", seeds=[1, 2], total_timesteps=600,
            eval_every=300, ppo_hidden=[8], k_samples=3, epochs=1)


def tiny(tmp_path, **kw):
    return ExperimentConfig.from_flat({**TINY, "output_dir": str(tmp_path / "run"), **kw})


class TestConfig:
    def test_zero_timesteps(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_flat({"total_timesteps": 0})

    def test_duplicate_seeds(self):
        with pytest.raises(ConfigError, match="distinct"):
            ExperimentConfig.from_flat({"seeds": [1, 1]})

    @pytest.mark.parametrize("kw", [dict(algorithm="trpo"), dict(mode="bayes"), dict(env="hopper"),
                                    dict(seeds=[]), dict(eval_every=0), dict(workers=0), dict(keep_prob=0.0)])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_flat(kw)

    def test_unknown_key_lists_valid(self):
        with pytest.raises(ConfigError, match="valid keys"):
            ExperimentConfig.from_flat({"kepp_prob": 0.9})

    def test_algorithm_defaults(self):
        ppo = ExperimentConfig.from_flat({"algorithm": "ppo"})
        ddpg = ExperimentConfig.from_flat({"algorithm": "ddpg"})
        assert ppo.seeds == list(range(1, 11))
        assert ddpg.seeds == list(range(1, 6))
        assert (ppo.bnn.keep_prob, ppo.bnn.k_samples, ppo.bnn.l2) == (0.95, 25, 0.95)
        assert (ddpg.bnn.keep_prob, ddpg.bnn.k_samples, ddpg.bnn.l2) == (0.99, 50, 0.0)
        assert ppo.bnn.tau == ddpg.bnn.tau == 0.85
        assert ppo.bnn.alpha == ddpg.bnn.alpha == 0.5
        assert (ppo.iteration_steps, ddpg.iteration_steps) == (2048, 1000)

    def test_flat_round_trip(self, tmp_path):
        cfg = tiny(tmp_path, tau=1.5, ddpg_hidden=[16, 16])
        flat = cfg.to_flat()
        assert set(flat) == set(CONFIG_KEYS)
        assert ExperimentConfig.from_flat(flat) == cfg
        path = tmp_path / "c.json"
        path.write_text(json.dumps(flat))
        assert load_config(path) == cfg

    def test_load_errors(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(p)
        p.write_text(json.dumps({"bnn": {"tau": 1.0}}))
        with pytest.raises(ConfigError, match="nested"):
            load_config(p)
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")


class TestRecords:
    def test_header_and_round_trip(self, tmp_path):
        recs = [RunRecord(1, 1, 100, -5.5, 0.25, 1.0, 0.1, 0.01, 0.2, None, None),
                RunRecord(1, 2, 200, -1.0 / 3.0, 0.5, 2.0, None, None, None, 3.5, 1.25)]
        path = tmp_path / "seed_1.csv"
        write_csv(path, recs)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == CSV_COLUMNS
        assert rows[1][9] == "" and rows[2][6] == ""
        assert read_csv(path) == recs

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            RunRecord(1, 1, 1, math.nan, 0.0)

    def test_timesteps_must_increase(self, tmp_path):
        with pytest.raises(ValueError):
            write_csv(tmp_path / "x.csv", [RunRecord(1, 1, 100, 0.0, 0.0), RunRecord(1, 2, 100, 0.0, 0.0)])

    def test_bad_header(self, tmp_path):
        p = tmp_path / "seed_3.csv"
        p.write_text("seed,iteration\n1,1\n")
        with pytest.raises(ValueError):
            read_csv(p)

    def test_seed_csvs(self, tmp_path):
        for name in ("seed_3.csv", "seed_10.csv", "seed_x.csv", "other.csv"):
            (tmp_path / name).write_text("")
        assert sorted(seed_csvs(tmp_path)) == [3, 10]


class TestWelch:
    @pytest.mark.parametrize("a,b,t,df,p", WELCH_REFERENCE)
    def test_reference(self, a, b, t, df, p):
        got_t, got_df, got_p = welch_ttest(a, b)
        assert got_t == pytest.approx(t, rel=1e-6, abs=1e-12)
        assert got_df == pytest.approx(df, rel=1e-6)
        assert got_p == pytest.approx(p, rel=1e-6, abs=1e-12)

    def test_equal_means_equal_variances(self):
        t, _, p = welch_ttest([1.0, 2.0, 3.0], [3.0, 2.0, 1.0])
        assert t == 0.0 and p == 1.0

    def test_swap_antisymmetry(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            a = rng.normal(size=int(rng.integers(2, 15)))
            b = rng.normal(1, 3, size=int(rng.integers(2, 15)))
            t1, df1, p1 = welch_ttest(a, b)
            t2, df2, p2 = welch_ttest(b, a)
            assert t1 == -t2 and p1 == p2 and df1 == df2

    def test_equal_variance_reduces_to_student(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            n = int(rng.integers(2, 12))
            a = rng.normal(size=n)
            b = rng.permutation(a) * -1.0 + rng.normal(scale=2)
            t, df, p = welch_ttest(a, b)
            ref = sps.ttest_ind(a, b, equal_var=True)
            assert t == pytest.approx(ref.statistic, abs=1e-9)
            assert df == pytest.approx(2 * n - 2, abs=1e-9)
            assert p == pytest.approx(ref.pvalue, abs=1e-9)
        # unequal sizes, variances matched by rescaling: the statistic still agrees
        a = rng.normal(size=5)
        b = rng.normal(size=9)
        b = (b - b.mean()) * a.std(ddof=1) / b.std(ddof=1) + 0.7
        assert welch_ttest(a, b)[0] == pytest.approx(sps.ttest_ind(a, b).statistic, abs=1e-9)

    def test_degenerate(self):
        with pytest.raises(DegenerateVarianceError):
            welch_ttest([1.0, 1.0], [2.0, 2.0, 2.0])
        with pytest.raises(ValueError):
            welch_ttest([1.0], [1.0, 2.0])

    def test_p_in_unit_interval(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            p = welch_ttest(rng.normal(size=4), rng.normal(rng.normal(scale=5), 1, size=6))[2]
            assert 0.0 <= p <= 1.0


class TestSummarize:
    def test_standard_error_hand(self):
        assert standard_error([10, 12, 14]) == pytest.approx(2.0 / math.sqrt(3.0), rel=1e-15)

    def test_identical_variants(self):
        scores = {1: -3.0, 2: -5.0, 3: -4.0}
        rep = summarize({"deterministic": scores, "alpha-bnn": dict(scores)})
        (c,) = rep.comparisons
        assert c.difference == 0.0 and not c.significant and c.p == 1.0

    def test_single_variant(self):
        rep = summarize({"alpha-bnn": {1: 1.0, 2: 3.0}})
        assert rep.comparisons == [] and rep.baseline is None
        assert rep.variants["alpha-bnn"].mean == 2.0
        assert rep.variants["alpha-bnn"].stderr == pytest.approx(1.0)

    def test_missing_baseline(self):
        with pytest.raises(ValueError, match="baseline"):
            summarize({"a": {1: 1.0, 2: 2.0}, "b": {1: 1.0, 2: 3.0}})

    def test_too_few_seeds(self):
        with pytest.raises(ValueError):
            summarize({"deterministic": {1: 1.0}})

    def test_flags_significance(self):
        rep = summarize({"deterministic": {i: float(i % 3) for i in range(10)},
                         "alpha-bnn": {i: 10.0 + i % 3 for i in range(10)}})
        (c,) = rep.comparisons
        assert c.significant and c.p < 1e-6 and c.t > 0
        assert "alpha-bnn" in rep.table()
        assert json.loads(json.dumps(rep.to_dict()))["comparisons"][0]["variant"] == "alpha-bnn"


class TestRunExperiment:
    def test_outputs_and_determinism(self, tmp_path):
        cfg = tiny(tmp_path)
        res = run_experiment(cfg)
        out = tmp_path / "run"
        assert sorted(p.name for p in out.iterdir()) == [
            "resets_seed_1.csv", "resets_seed_2.csv", "seed_1.csv", "seed_2.csv", "summary.json"]
        summary = json.loads((out / "summary.json").read_text())
        assert summary["config"] == cfg.to_flat()
        assert summary["seed_errors"] == []
        assert set(summary["report"]["variants"]["alpha-bnn"]["scores"]) == {"1", "2"}
        for seed in (1, 2):
            rows = read_csv(out / f"seed_{seed}.csv")
            assert [r.timesteps for r in rows] == [300, 600]
            assert rows[-1].episode_return_mean == res.final_scores[seed]
            assert summary["final_scores"][str(seed)] == rows[-1].episode_return_mean
            assert all(r.q_estimate_mean is None and r.wall_time_s is None for r in rows)
        again = run_experiment(cfg.replace(output_dir=str(tmp_path / "again")))
        for seed in (1, 2):
            assert (out / f"seed_{seed}.csv").read_bytes() == (tmp_path / "again" / f"seed_{seed}.csv").read_bytes()
        assert again.final_scores == res.final_scores

    def test_final_score_is_last_ten_eval_episodes(self, tmp_path, monkeypatch):
        calls = []
        real = runner_mod.rollout_return

        def spy(env, seed, policy):
            calls.append(real(env, seed, policy))
            return calls[-1]

        monkeypatch.setattr(runner_mod, "rollout_return", spy)
        res = run_experiment(tiny(tmp_path, seeds=[1]))
        assert len(calls) == 20
        assert res.final_scores[1] == float(np.mean(calls[-10:]))

    def test_mode_toggle_keeps_env_draws(self, tmp_path):
        for mode in ("deterministic", "alpha-bnn"):
            run_experiment(tiny(tmp_path, mode=mode, output_dir=str(tmp_path / mode)))
        for seed in (1, 2):
            a = (tmp_path / "deterministic" / f"resets_seed_{seed}.csv").read_bytes()
            b = (tmp_path / "alpha-bnn" / f"resets_seed_{seed}.csv").read_bytes()
            assert a == b

    def test_ddpg_columns(self, tmp_path):
        cfg = tiny(tmp_path, algorithm="ddpg", env="pendulum", total_timesteps=300, eval_every=150,
                   warmup_steps=100, batch_size=16, ddpg_hidden=[8], seeds=[1], record_wall_time=True)
        run_experiment(cfg)
        rows = read_csv(tmp_path / "run" / "seed_1.csv")
        assert all(r.clip_fraction is None and r.approx_kl is None for r in rows)
        assert all(r.q_estimate_mean is not None and r.wall_time_s > 0 for r in rows)

    def test_unwritable_output_before_training(self, tmp_path, monkeypatch):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        monkeypatch.setattr(runner_mod, "run_trial", lambda *a: pytest.fail("training started"))
        with pytest.raises(ConfigError, match="writable"):
            run_experiment(tiny(tmp_path, output_dir=str(blocker / "sub")))

    def test_failed_seed_does_not_abort_siblings(self, tmp_path, monkeypatch):
        real = runner_mod.run_trial

        def flaky(cfg, seed):
            if seed == 2:
                raise FloatingPointError("boom")
            return real(cfg, seed)

        monkeypatch.setattr(runner_mod, "run_trial", flaky)
        res = run_experiment(tiny(tmp_path, seeds=[1, 2, 3]))
        assert sorted(res.final_scores) == [1, 3]
        summary = json.loads((tmp_path / "run" / "summary.json").read_text())
        assert summary["seed_errors"] == [{"seed": 2, "error": "FloatingPointError: boom"}]
        assert not (tmp_path / "run" / "seed_2.csv").exists()

    def test_workers_match_serial(self, tmp_path):
        serial = run_experiment(tiny(tmp_path, output_dir=str(tmp_path / "serial")))
        par = run_experiment(tiny(tmp_path, output_dir=str(tmp_path / "par"), workers=2))
        assert serial.final_scores == par.final_scores
        for seed in (1, 2):
            assert ((tmp_path / "serial" / f"seed_{seed}.csv").read_bytes()
                    == (tmp_path / "par" / f"seed_{seed}.csv").read_bytes())

    @pytest.mark.slow
    def test_three_seed_smoke_20k(self, tmp_path):
        cfg = ExperimentConfig.from_flat({"algorithm": "ppo", "env": "pointmass", "seeds": [1, 2, 3],
                                          "total_timesteps": 20_000, "output_dir": str(tmp_path / "smoke")})
        run_experiment(cfg)
        csvs = seed_csvs(tmp_path / "smoke")
        assert sorted(csvs) == [1, 2, 3]
        for path in csvs.values():
            rows = read_csv(path)
            steps = [r.timesteps for r in rows]
            assert steps == sorted(set(steps)) and steps[-1] == 20_000
            for r in rows:
                assert all(v is None or math.isfinite(v) for v in vars(r).values())


class TestSweep:
    def test_unknown_parameter(self, tmp_path):
        with pytest.raises(ConfigError, match="tau.*alpha.*keep_prob.*k_samples"):
            sweep(tiny(tmp_path), "gamma", [0.9])

    def test_parameter_must_apply(self, tmp_path):
        with pytest.raises(ConfigError, match="no effect"):
            sweep(tiny(tmp_path, mode="deterministic"), "alpha", [0.1])
        with pytest.raises(ConfigError):
            sweep(tiny(tmp_path, mode="l2-only", l2_scale=0.1), "keep_prob", [0.9])

    def test_single_value_equals_run(self, tmp_path):
        base = tiny(tmp_path, output_dir=str(tmp_path / "sw"))
        sweep(base, "tau", [0.85])
        run_experiment(tiny(tmp_path, output_dir=str(tmp_path / "direct")))
        for seed in (1, 2):
            assert ((tmp_path / "sw" / "tau=0.85" / f"seed_{seed}.csv").read_bytes()
                    == (tmp_path / "direct" / f"seed_{seed}.csv").read_bytes())

    def test_tau_sweep_structure(self, tmp_path):
        out = sweep(tiny(tmp_path, output_dir=str(tmp_path / "sw")), "tau", [0.5, 0.85, 1.5])
        rows = out["summary"]["values"]
        assert [r["value"] for r in rows] == [0.5, 0.85, 1.5]
        assert all(sorted(r["final_scores"]) == ["1", "2"] for r in rows)
        with open(tmp_path / "sw" / "sweep_tau.csv", newline="") as fh:
            table = list(csv.DictReader(fh))
        assert len(table) == 3 * 2 * 2
        assert {(r["value"], r["seed"]) for r in table} == {(v, s) for v in ("0.5", "0.85", "1.5") for s in "12"}

    def test_keep_one_arm_matches_control(self, tmp_path):
        base = tiny(tmp_path, output_dir=str(tmp_path / "sw"), l2_scale=0.0, k_samples=5)
        sweep(base, "keep_prob", [0.9, 1.0])
        control = tiny(tmp_path, output_dir=str(tmp_path / "ctl"), l2_scale=0.0, k_samples=1, keep_prob=1.0)
        run_experiment(control)
        for seed in (1, 2):
            arm = read_csv(tmp_path / "sw" / "keep_prob=1.0" / f"seed_{seed}.csv")
            ctl = read_csv(tmp_path / "ctl" / f"seed_{seed}.csv")
            for x, y in zip(arm, ctl):
                for k in CSV_COLUMNS:
                    a, b = getattr(x, k), getattr(y, k)
                    assert (a is None and b is None) or a == pytest.approx(b, rel=1e-6, abs=1e-6)


class TestCli:
    def write_config(self, tmp_path, **kw):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps({**TINY, "output_dir": str(tmp_path / "cli"), **kw}))
        return str(p)

    def test_train_and_stats(self, tmp_path, capsys):
        cfg = self.write_config(tmp_path)
        assert cli.main(["train", cfg]) == 0
        assert cli.main(["train", cfg, "--output-dir", str(tmp_path / "det")]) == 0
        cfg2 = self.write_config(tmp_path, mode="deterministic", output_dir=str(tmp_path / "cmp" / "det"))
        assert cli.main(["train", cfg2]) == 0
        cfg3 = self.write_config(tmp_path, output_dir=str(tmp_path / "cmp" / "bnn"))
        assert cli.main(["train", cfg3]) == 0
        capsys.readouterr()
        assert cli.main(["stats", str(tmp_path / "cmp"), "--json", str(tmp_path / "r.json")]) == 0
        report = json.loads((tmp_path / "r.json").read_text())
        assert report["baseline"] == "deterministic"
        assert report["comparisons"][0]["variant"] == "alpha-bnn"
        assert "alpha-bnn" in capsys.readouterr().out

    def test_config_errors_exit_one(self, tmp_path):
        assert cli.main(["train", str(tmp_path / "nope.json")]) == 1
        assert cli.main(["train", self.write_config(tmp_path, bogus=1)]) == 1
        assert cli.main(["sweep", self.write_config(tmp_path), "--param", "gamma", "--values", "0.9"]) == 1
        assert cli.main(["stats", str(tmp_path)]) == 1
        assert cli.main(["frobnicate"]) == 1

    def test_seed_failure_exit_codes(self, tmp_path, monkeypatch):
        real = runner_mod.run_trial
        cfg = self.write_config(tmp_path)

        def fail_two(c, seed):
            if seed == 2:
                raise RuntimeError("diverged")
            return real(c, seed)

        monkeypatch.setattr(runner_mod, "run_trial", fail_two)
        assert cli.main(["train", cfg]) == 3
        monkeypatch.setattr(runner_mod, "run_trial", lambda c, s: (_ for _ in ()).throw(RuntimeError("x")))
        assert cli.main(["train", cfg]) == 2

    def test_sweep(self, tmp_path, capsys):
        cfg = self.write_config(tmp_path, seeds=[1])
        assert cli.main(["sweep", cfg, "--param", "k_samples", "--values", "2", "3"]) == 0
        out = capsys.readouterr().out
        assert "k_samples=2" in out and "k_samples=3" in out
        assert (tmp_path / "cli" / "sweep_k_samples.csv").exists()

    def test_baseline(self, tmp_path, capsys):
        assert cli.main(["baseline", "--env", "pointmass", "--episodes", "5", "--json", str(tmp_path / "b.json")]) == 0
        from bayesvf.envs import PointMass, random_policy_baseline
        data = json.loads((tmp_path / "b.json").read_text())
        assert data == {"pointmass": random_policy_baseline(PointMass(), 0, 5)}
        assert cli.main(["baseline", "--env", "hopper"]) == 1
