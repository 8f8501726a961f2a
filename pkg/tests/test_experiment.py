import numpy as np
import pytest

from paritygnn.experiment import (
    EvalReport,
    ExperimentConfig,
    Metrics,
    compute_metrics,
    evaluate,
    evaluate_checkpoint,
    load_model,
    misclassification_csv,
    render_table,
    train,
)
from paritygnn.games import WinningRegions
from paritygnn.generator import GeneratorParams, generate_dataset, generate_game
from paritygnn.solvers import solve_zielonka

TOY = dict(message_layers=2, hidden_width=8, head_width=8)


def regions(w0, n):
    return WinningRegions(frozenset(w0), frozenset(range(n)) - frozenset(w0))


@pytest.fixture(scope="module")
def pairs():
    out = []
    for i in range(50):
        g = generate_game(GeneratorParams(5, 12), 21, i)
        out.append((g, solve_zielonka(g, strategies=False).regions))
    return out


class TestMetrics:
    def test_all_correct(self):
        truth = [regions({0, 1}, 4), regions({2}, 3)]
        m = compute_metrics(truth, truth)
        assert m.vertex_accuracy == 1.0
        assert (m.games_err0, m.games_err1, m.games_err2plus) == (2, 0, 0)

    def test_one_wrong(self):
        truth = regions({0, 1, 2}, 10)
        m = compute_metrics([regions({0, 1}, 10)], [truth])
        assert m.vertex_accuracy == pytest.approx(0.9)
        assert (m.games_err0, m.games_err1, m.games_err2plus) == (0, 1, 0)
        assert m.per_game == [(10, 1)]

    def test_two_wrong(self):
        m = compute_metrics([regions({5, 6}, 8)], [regions(set(), 8)])
        assert m.games_err2plus == 1

    def test_vertex_set_mismatch(self):
        with pytest.raises(ValueError, match="different vertices"):
            compute_metrics([regions({0}, 3)], [regions({0}, 4)])

    def test_count_mismatch(self):
        with pytest.raises(ValueError):
            compute_metrics([], [regions({0}, 1)])

    def test_misclassified_total_identity(self):
        rng = np.random.default_rng(0)
        truths, preds = [], []
        for _ in range(40):
            n = int(rng.integers(1, 30))
            truths.append(regions({v for v in range(n) if rng.random() < 0.5}, n))
            preds.append(regions({v for v in range(n) if rng.random() < 0.5}, n))
        m = compute_metrics(preds, truths)
        assert sum(e for _, e in m.per_game) == pytest.approx((1 - m.vertex_accuracy) * m.total_vertices)
        assert m.games_err0 + m.games_err1 + m.games_err2plus == m.games == 40

    def test_majority_baseline(self):
        m = compute_metrics([regions({0}, 4)], [regions({0}, 4)])
        assert m.majority_baseline == 0.75


class TestRendering:
    def metrics(self):
        return compute_metrics([regions({0}, 5), regions({1}, 3)], [regions({0}, 5), regions({0}, 3)])

    def test_csv(self):
        assert misclassification_csv(self.metrics()) == "vertex_count,misclassified\n5,0\n3,2\n"

    def test_table_header(self):
        report = EvalReport("GCN", {}, train=self.metrics(), test=self.metrics())
        text = render_table([report])
        header = text.splitlines()[1].split()
        assert header == ["Model", "Acc.", "n_err=0", "n_err=1", "n_err≥2"]
        assert text.splitlines()[2].split() == ["GCN", "0.75", "1", "0", "1"]

    def test_report_json_round_trip(self, tmp_path):
        report = EvalReport("GAT", {"a": 1}, train=self.metrics(), timings={"x": 0.5}, loss_curve=[0.7, 0.6])
        report.save(tmp_path / "r.json")
        back = EvalReport.load(tmp_path / "r.json")
        assert back == report

    def test_metrics_dict_round_trip(self):
        m = self.metrics()
        assert Metrics.from_dict(m.as_dict()) == m

    def test_scatter_svg(self, tmp_path):
        pytest.importorskip("matplotlib")
        from paritygnn.experiment import scatter_plot

        scatter_plot(self.metrics(), tmp_path / "s.svg", "t")
        assert (tmp_path / "s.svg").read_text().lstrip().startswith("<?xml")


class TestTraining:
    def test_loss_decreases(self, pairs):
        from paritygnn.model import init_params, model_backward

        config = ExperimentConfig(epochs=3, seed=3, **TOY)
        model_config = config.model_config()

        def mean_loss(params):
            return np.mean([model_backward(g, params, model_config, r, "infer")[0] for g, r in pairs])

        start = init_params(model_config, config.seed)
        result = train(pairs, config)
        assert len(result.losses) == 150
        assert mean_loss(result.params) < mean_loss(start)

    def test_reproducible_checkpoint(self, pairs, tmp_path):
        config = ExperimentConfig(seed=5, **TOY)
        for name in "ab":
            train(pairs[:10], config).save(tmp_path / name)
        assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()

    def test_different_seed_differs(self, pairs):
        a = train(pairs[:5], ExperimentConfig(seed=1, **TOY)).params
        b = train(pairs[:5], ExperimentConfig(seed=2, **TOY)).params
        assert not np.array_equal(a["head2.A"], b["head2.A"])

    def test_games_per_step(self, pairs):
        result = train(pairs[:10], ExperimentConfig(games_per_step=4, **TOY))
        assert len(result.losses) == 10

    def test_checkpoint_round_trip(self, pairs, tmp_path):
        config = ExperimentConfig(variant="gat", seed=2, **TOY)
        result = train(pairs[:5], config)
        result.save(tmp_path / "m.ckpt")
        params, model_config, meta = load_model(tmp_path / "m.ckpt")
        assert model_config == config.model_config()
        assert meta["loss_curve"] == result.losses
        assert all(np.array_equal(params[k], result.params[k]) for k in params)


class TestEvaluation:
    def test_untrained_near_baseline(self, pairs):
        from paritygnn.model import init_params

        config = ExperimentConfig(**TOY).model_config()
        m = evaluate(pairs, init_params(config, 0), config)
        # an untrained model predicts one class almost everywhere
        assert abs(m.vertex_accuracy - 0.5) <= abs(m.majority_baseline - 0.5) + 0.1

    def test_eval_deterministic(self, tmp_path):
        manifest = generate_dataset(12, GeneratorParams(5, 10), 4, 0.5, tmp_path / "ds")
        result = train(manifest.load_pairs("train"), ExperimentConfig(seed=0, **TOY))
        result.save(tmp_path / "m.ckpt")
        a = evaluate_checkpoint(tmp_path / "m.ckpt", manifest)
        b = evaluate_checkpoint(tmp_path / "m.ckpt", manifest)
        assert a.train == b.train and a.test == b.test
        assert a.train.games == 6 and a.test.games == 6
