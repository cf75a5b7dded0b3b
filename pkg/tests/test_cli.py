"""Command-line surface: exit codes, composition, reproducibility."""

import numpy as np
import pytest

from protoseg import load_manifest, read_tensor, write_tensor
from protoseg.cli import cli_dispatch


def write_pair(tmp_path):
    g = np.zeros((8, 8), dtype=np.uint8)
    g[2:6, 2:6] = 1
    feature = (g.astype(np.float32) + 0.01)[:, :, None]
    write_tensor(tmp_path / "feature.npy", feature)
    write_tensor(tmp_path / "mask.npy", g)
    write_tensor(tmp_path / "gt.npy", g)
    return g


def test_no_arguments_is_usage_error(capsys):
    assert cli_dispatch([]) == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_flag_is_usage_error(capsys):
    code = cli_dispatch(
        ["score", "--pred", "a.npy", "--truth", "b.npy", "--bogus", "x"]
    )
    assert code == 1
    err = capsys.readouterr().err
    assert "--bogus" in err


def test_unknown_subcommand_is_usage_error():
    assert cli_dispatch(["frobnicate"]) == 1


def test_help_exits_zero(capsys):
    assert cli_dispatch(["--help"]) == 0
    assert "command" in capsys.readouterr().out


def test_missing_file_is_data_error(tmp_path, capsys):
    code = cli_dispatch(
        ["score", "--pred", str(tmp_path / "no.npy"), "--truth", str(tmp_path / "no.npy")]
    )
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_sam_writes_dump_and_prints_score(tmp_path, capsys):
    g = write_pair(tmp_path)
    code = cli_dispatch(
        [
            "sam",
            "--feature", str(tmp_path / "feature.npy"),
            "--mask", str(tmp_path / "mask.npy"),
            "--out", str(tmp_path / "sam.npy"),
            "--truth", str(tmp_path / "gt.npy"),
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "sa_score: 1.000000" in out
    np.testing.assert_array_equal(read_tensor(tmp_path / "sam.npy"), g)


def test_sam_upsamples_feature_to_mask_dims(tmp_path, capsys):
    g = np.zeros((8, 8), dtype=np.uint8)
    g[:, 4:] = 1
    low = np.zeros((2, 2, 1), dtype=np.float32)
    low[:, 1, 0] = 1.0
    write_tensor(tmp_path / "low.npy", low)
    write_tensor(tmp_path / "mask.npy", g)
    code = cli_dispatch(
        [
            "sam",
            "--feature", str(tmp_path / "low.npy"),
            "--mask", str(tmp_path / "mask.npy"),
            "--out", str(tmp_path / "sam.npy"),
        ]
    )
    assert code == 0
    assert read_tensor(tmp_path / "sam.npy").shape == (8, 8)


def test_score_command(tmp_path, capsys):
    write_pair(tmp_path)
    code = cli_dispatch(
        ["score", "--pred", str(tmp_path / "gt.npy"), "--truth", str(tmp_path / "gt.npy")]
    )
    assert code == 0
    assert "sa_score: 1.000000" in capsys.readouterr().out


def test_synth_emits_loadable_manifest(tmp_path):
    out = tmp_path / "bed"
    code = cli_dispatch(
        ["synth", "--out", str(out), "--count", "2", "--seed", "5", "--separations", "1,3"]
    )
    assert code == 0
    man = load_manifest(out / "manifest.json")
    assert len(man.images) == 2
    assert [l.layer_index for l in man.images[0].layers] == [0, 1]
    assert man.global_seed == 5


def test_synth_deterministic_across_runs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert cli_dispatch(["synth", "--out", str(out), "--count", "1", "--seed", "9"]) == 0
    assert (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()
    assert (a / "img000" / "layer0.npy").read_bytes() == (b / "img000" / "layer0.npy").read_bytes()


def test_layer_sweep_over_synth_bed(tmp_path, capsys):
    out = tmp_path / "bed"
    cli_dispatch(["synth", "--out", str(out), "--count", "2", "--separations", "0.5,6"])
    code = cli_dispatch(
        ["layer-sweep", "--manifest", str(out / "manifest.json"),
         "--out", str(tmp_path / "sweep.csv")]
    )
    assert code == 0
    text = (tmp_path / "sweep.csv").read_text()
    assert text.startswith("image_id,layer_index,")
    assert len(text.splitlines()) == 5  # header + 2 images x 2 layers


def test_layer_sweep_report_stdout(tmp_path, capsys):
    out = tmp_path / "bed"
    cli_dispatch(["synth", "--out", str(out), "--count", "1"])
    assert cli_dispatch(["layer-sweep", "--manifest", str(out / "manifest.json")]) == 0
    assert "mean_sa=" in capsys.readouterr().out


def test_rank_and_coverage_commands(tmp_path, capsys):
    out = tmp_path / "bed"
    cli_dispatch(["synth", "--out", str(out), "--count", "3", "--channels", "2"])
    man = str(out / "manifest.json")
    assert cli_dispatch(["rank", "--manifest", man]) == 0
    ranked = capsys.readouterr().out
    assert ranked.count("rank ") == 3
    assert cli_dispatch(["coverage", "--manifest", man, "--coverages", "100,50"]) == 0
    assert "retained=" in capsys.readouterr().out


def test_coverage_bad_list_is_usage_error(tmp_path, capsys):
    out = tmp_path / "bed"
    cli_dispatch(["synth", "--out", str(out), "--count", "1"])
    code = cli_dispatch(
        ["coverage", "--manifest", str(out / "manifest.json"), "--coverages", "abc"]
    )
    assert code == 1


def test_noise_command_zero_level(tmp_path, capsys):
    out = tmp_path / "bed"
    cli_dispatch(["synth", "--out", str(out), "--count", "1"])
    code = cli_dispatch(
        ["noise", "--manifest", str(out / "manifest.json"), "--levels", "0,0.2"]
    )
    assert code == 0
    assert "level 0.000000: mean_sa_diff=0.000000" in capsys.readouterr().out


def test_unit_sweep_command_with_heatmap(tmp_path, capsys):
    rng = np.random.default_rng(0)
    g = np.zeros((6, 6), dtype=np.uint8)
    g[2:5, 1:4] = 1
    feature = np.stack(
        [g.astype(np.float32) * 2, rng.standard_normal((6, 6)).astype(np.float32)], axis=2
    )
    write_tensor(tmp_path / "f.npy", feature)
    write_tensor(tmp_path / "m.npy", g)
    code = cli_dispatch(
        [
            "unit-sweep",
            "--feature", str(tmp_path / "f.npy"),
            "--mask", str(tmp_path / "m.npy"),
            "--truth", str(tmp_path / "m.npy"),
            "--heatmap", str(tmp_path / "units.pgm"),
        ]
    )
    assert code == 0
    assert (tmp_path / "units.pgm").read_bytes().startswith(b"P5")
    out = capsys.readouterr().out
    assert "rank 0: unit 0 sa=1.000000" in out


def test_separableness_command(tmp_path, capsys):
    out = tmp_path / "bed"
    cli_dispatch(["synth", "--out", str(out), "--count", "2"])
    assert cli_dispatch(["separableness", "--manifest", str(out / "manifest.json")]) == 0
    assert "mean_gain:" in capsys.readouterr().out


def test_gradcheck_exit_codes(capsys):
    assert cli_dispatch(["gradcheck", "--seed", "7", "--grad-mode", "through"]) == 0
    assert "max relative error" in capsys.readouterr().out
    assert cli_dispatch(["gradcheck", "--seed", "7", "--tol", "0"]) == 2


def test_render_heatmap_command(tmp_path):
    write_tensor(tmp_path / "h.npy", np.array([[0.0, 1.0]], dtype=np.float32))
    code = cli_dispatch(
        ["render", "--heatmap", str(tmp_path / "h.npy"), "--out", str(tmp_path / "h.pgm")]
    )
    assert code == 0
    assert (tmp_path / "h.pgm").read_bytes().startswith(b"P5")


def test_render_curve_from_report_csv(tmp_path):
    out = tmp_path / "bed"
    cli_dispatch(["synth", "--out", str(out), "--count", "2", "--separations", "1,4"])
    sweep_csv = tmp_path / "sweep.csv"
    cli_dispatch(["layer-sweep", "--manifest", str(out / "manifest.json"),
                  "--out", str(sweep_csv)])
    code = cli_dispatch(
        [
            "render",
            "--curve", str(sweep_csv),
            "--x", "layer_index",
            "--y", "sa",
            "--series", "image_id",
            "--out", str(tmp_path / "curve.svg"),
        ]
    )
    assert code == 0
    assert "<svg" in (tmp_path / "curve.svg").read_text()


def test_render_curve_requires_axes(tmp_path):
    assert cli_dispatch(["render", "--curve", "x.csv", "--out", "y.svg"]) == 1


def test_jobs_env_fallback(tmp_path, monkeypatch, capsys):
    out = tmp_path / "bed"
    cli_dispatch(["synth", "--out", str(out), "--count", "2"])
    monkeypatch.setenv("PROTOSEG_JOBS", "2")
    assert cli_dispatch(["layer-sweep", "--manifest", str(out / "manifest.json")]) == 0
