import pytest
import torch
from click.testing import CliRunner

from conftest import make_config
from gdrlab.cli import cli
from gdrlab.core.config import dump_config
from gdrlab.resources.presets import Artifacts
from gdrlab.resources.scenes import SceneStore


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def config_file(tmp_path):
    return dump_config(make_config(), tmp_path / "tiny.ini")


def invoke(runner, *args):
    result = runner.invoke(cli, [str(a) for a in args], catch_exceptions=False)
    return result


class TestCli:

    @pytest.mark.smoke
    @pytest.mark.pc
    def test_gen_data(self, runner, tmp_path):
        out = tmp_path / "data"
        result = invoke(runner, "gen-data", "--preset", "desk", "--num", 3, "--image", "--resolution", 32,
                        "--seed", 1, "--out", out)
        assert result.exit_code == 0, result.output
        with SceneStore(out) as store:
            assert store.info.count == 3
            assert store.info.resolution == 32

    @pytest.mark.pc
    def test_pretrain_train_eval(self, runner, tmp_path, image_store, config_file):
        run = tmp_path / "run"
        result = invoke(runner, "pretrain", "--data", image_store, "--config", config_file,
                        "--scale-factor", "1.0", "--out", run)
        assert result.exit_code == 0, result.output
        assert (run / "config.ini").exists()
        assert (run / Artifacts.STAGE1_DIR / Artifacts.SUMMARY).exists()
        best_stage1 = run / Artifacts.STAGE1_DIR / Artifacts.BEST

        result = invoke(runner, "train", "--data", image_store, "--config", config_file, "--scale-factor", "1.0",
                        "--stage1-checkpoint", best_stage1, "--out", run)
        assert result.exit_code == 0, result.output
        best = run / Artifacts.STAGE2_DIR / Artifacts.BEST
        assert best.exists()
        assert "combined" in (run / Artifacts.STAGE2_DIR / Artifacts.SUMMARY).read_text(encoding="utf-8")

        evaluation = tmp_path / "eval"
        result = invoke(runner, "eval", "--checkpoint", best, "--data", image_store, "--out", evaluation)
        assert result.exit_code == 0, result.output
        assert (evaluation / Artifacts.SUMMARY).exists()
        assert (evaluation / Artifacts.RECORDS).exists()

        result = invoke(runner, "visualize", "index-map", "--checkpoint", best, "--data", image_store,
                        "--out", tmp_path / "vis")
        assert result.exit_code == 0, result.output
        assert (tmp_path / "vis" / "index_s000_g0.png").exists()

    @pytest.mark.nc
    def test_swap_needs_exactly_one_region(self, runner, tmp_path, image_store):
        checkpoint = tmp_path / "any.pt"
        checkpoint.write_bytes(b"")
        for extra in ([], ["--slot", "0", "--random-region"]):
            result = runner.invoke(cli, ["visualize", "swap", "--checkpoint", str(checkpoint), "--data",
                                         str(image_store), "--out", str(tmp_path / "swap"), "--group", "0", *extra])
            assert result.exit_code == 2
            assert "exactly one" in result.output

    @pytest.mark.nc
    def test_lab_errors_exit_with_code_two(self, runner, tmp_path, image_store):
        checkpoint = tmp_path / "old.pt"
        torch.save({"version": 99}, checkpoint)
        result = runner.invoke(cli, ["eval", "--checkpoint", str(checkpoint), "--data", str(image_store),
                                     "--out", str(tmp_path / "eval")])
        assert result.exit_code == 2

    @pytest.mark.nc
    def test_unknown_preset(self, runner, tmp_path):
        result = runner.invoke(cli, ["gen-data", "--preset", "clevr", "--num", "1", "--out", str(tmp_path / "x")])
        assert result.exit_code == 2
