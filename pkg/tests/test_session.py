"""Session lifecycle, metric accounting, logging, and replay determinism."""
import numpy as np
import pytest

from segctl.errors import (
    ConfigDigestError,
    LabelCoverageError,
    MalformedLogError,
    ReplayChecksumError,
    StrokeBoundsError,
    UnknownLabelError,
)
from segctl.grid import ImageVolume
from segctl.inputs import Stroke
from segctl.session import (
    SessionConfig,
    decompose_errors,
    labels_checksum,
    replay,
    start_session,
)
from segctl.synthetic import two_disks_case, two_region_case


def region_cfg(**kw):
    return SessionConfig(dynamics="region", **kw)


def split_session(shape=(24, 24), init=None, **cfg_kw):
    """Clean vertical two-region scene; init defaults to the reference."""
    case = two_region_case(shape=shape, sigma=0.0)
    cfg = region_cfg(n_labels=2, **cfg_kw)
    start = case.reference if init is None else init
    return start_session(case.img, start, cfg, reference=case.reference), case


# ------------------------------------------------------------------ config


def test_config_validation():
    with pytest.raises(ValueError):
        SessionConfig(dynamics="magic")
    with pytest.raises(ValueError):
        SessionConfig(n_labels=1)
    with pytest.raises(ValueError):
        SessionConfig(dt=0.0)
    with pytest.raises(ValueError):
        SessionConfig(review_interval=0)


def test_config_digest_is_stable_and_sensitive():
    a = SessionConfig()
    b = SessionConfig()
    assert a.digest == b.digest
    assert len(a.digest) == 12
    assert int(a.digest, 16) >= 0  # hex
    assert SessionConfig(dt=0.2).digest != a.digest
    assert SessionConfig.from_dict(a.to_dict()) == a


# ----------------------------------------------------------------- startup


def test_two_disks_session_constructs_with_three_labels():
    case = two_disks_case(size=64)
    sess = start_session(case.img, case.reference, region_cfg(n_labels=3),
                         reference=case.reference)
    assert sess.cfg.n_labels == 3
    assert sorted(np.unique(sess.state.labels)) == [1, 2, 3]
    # tick 0 metrics already sampled
    assert len(sess.metrics.rows) == 1
    assert sess.metrics.rows[0].tick == 0
    assert sess.metrics.rows[0].actuated == 0
    assert sess.metrics.rows[0].dice == 1.0


def test_missing_background_seeds_in_distance_mode_errors():
    case = two_region_case(shape=(16, 16))
    cfg = SessionConfig(dynamics="distance", n_labels=2)
    with pytest.raises(LabelCoverageError):
        start_session(case.img, {1: [(8, 4)]}, cfg)


def test_init_map_must_cover_every_label():
    case = two_region_case(shape=(16, 16))
    bad = np.full((16, 16), 2, dtype=np.int64)  # label 1 absent
    with pytest.raises(LabelCoverageError):
        start_session(case.img, bad, region_cfg(n_labels=2))
    worse = case.reference.copy()
    worse[0, 0] = 9  # out of range
    with pytest.raises(LabelCoverageError):
        start_session(case.img, worse, region_cfg(n_labels=2))


def test_seed_init_region_mode_drops_unseeded_to_background():
    case = two_region_case(shape=(16, 16))
    sess = start_session(
        case.img, {1: [(8, 4), (9, 4)]}, region_cfg(n_labels=2)
    )
    assert sess.state.labels[8, 4] == 1
    assert sess.state.labels[0, 0] == 2
    assert (sess.state.labels == 1).sum() == 2


def test_seed_out_of_bounds_errors():
    case = two_region_case(shape=(16, 16))
    with pytest.raises(StrokeBoundsError):
        start_session(case.img, {1: [(8, 99)], 2: [(1, 1)]},
                      region_cfg(n_labels=2))


def test_identical_construction_gives_identical_field_checksums():
    a, _ = split_session()
    b, _ = split_session()
    assert a.checksum() == b.checksum()
    for i in (1, 2):
        assert np.array_equal(a.state.phi[i].values, b.state.phi[i].values)
        assert np.array_equal(a.state.est[i].values, b.state.est[i].values)


def test_distance_session_inits_to_geodesic_voronoi():
    case = two_region_case(shape=(16, 16))
    cfg = SessionConfig(dynamics="distance", n_labels=2)
    sess = start_session(case.img, {1: [(8, 4)], 2: [(8, 12)]}, cfg,
                         reference=case.reference)
    assert sess.state.labels[8, 4] == 1
    assert sess.state.labels[8, 12] == 2
    assert sess.min_foreground_dice() > 0.9


# ------------------------------------------------------------------ stroke


def test_five_voxel_stroke_adds_five_actuated():
    sess, _ = split_session()
    voxels = tuple((10, c) for c in range(2, 7))
    sess.ingest_stroke(Stroke(1, voxels))
    assert sess.metrics.impulses == 1
    row = sess.tick()
    assert row.actuated == 5


def test_stroke_label_and_bounds_are_validated():
    sess, _ = split_session()
    with pytest.raises(UnknownLabelError):
        sess.ingest_stroke(Stroke(7, ((1, 1),)))
    with pytest.raises(StrokeBoundsError):
        sess.ingest_stroke(Stroke(1, ((500, 1),)))


def test_stroke_on_already_correct_region_reclassifies_nothing():
    sess, _ = split_session()
    before = sess.state.labels.copy()
    sess.ingest_stroke(Stroke(1, tuple((r, 5) for r in range(8, 13))))
    assert np.array_equal(sess.state.labels, before)
    row = sess.tick()
    assert row.reclassified == 0


def test_converged_session_ticks_report_zero_reclassified():
    sess, _ = split_session()
    for _ in range(10):
        assert sess.tick().reclassified == 0


def test_growth_impulse_reclassifies_voxels():
    case = two_region_case(shape=(24, 24))
    init = np.full((24, 24), 2, dtype=np.int64)
    init[:, :8] = 1  # reference extends to column 11
    sess = start_session(case.img, init, region_cfg(n_labels=2),
                         reference=case.reference)
    sess.ingest_stroke(Stroke(1, tuple((r, 10) for r in range(10, 14))))
    row = sess.tick()
    assert row.reclassified > 0


def test_actuated_is_cumulative_and_excludes_growth():
    sess, _ = split_session()
    sess.ingest_stroke(Stroke(1, ((10, 2), (10, 3))))
    for _ in range(3):
        sess.tick()
    sess.ingest_stroke(Stroke(1, ((12, 2), (12, 3), (12, 4))))
    sess.tick()
    assert sess.metrics.actuated == 5
    assert sess.metrics.rows[-1].actuated == 5


def test_distance_stroke_cannot_erase_a_labels_last_seed():
    case = two_region_case(shape=(16, 16))
    cfg = SessionConfig(dynamics="distance", n_labels=2)
    sess = start_session(case.img, {1: [(8, 4)], 2: [(8, 12)]}, cfg)
    with pytest.raises(LabelCoverageError):
        sess.ingest_stroke(Stroke(1, ((8, 12),)))
    # untouched after the failed stroke
    assert sess.support[2] == [(8, 12)]
    assert sess.metrics.impulses == 0


def test_distance_stroke_steals_support_latest_wins():
    case = two_region_case(shape=(16, 16))
    cfg = SessionConfig(dynamics="distance", n_labels=2)
    sess = start_session(case.img, {1: [(8, 4)], 2: [(8, 12), (2, 12)]}, cfg)
    sess.ingest_stroke(Stroke(1, ((8, 12),)))
    assert sess.support[2] == [(2, 12)]
    assert (8, 12) in sess.support[1]
    assert sess.state.labels[8, 12] == 1


# ------------------------------------------------------------------ replay


def scripted_session(log_path=None):
    case = two_region_case(shape=(24, 24))
    init = np.full((24, 24), 2, dtype=np.int64)
    init[:, :8] = 1
    sess = start_session(case.img, init, region_cfg(n_labels=2, seed=7),
                         reference=case.reference, log_path=log_path)
    for _ in range(3):
        sess.tick()
    sess.ingest_stroke(Stroke(1, tuple((r, 9) for r in range(10, 14))))
    for _ in range(4):
        sess.tick()
    sess.ingest_stroke(Stroke(1, ((4, 10), (5, 10))))
    for _ in range(3):
        sess.tick()
    sess.log_snapshot()
    for _ in range(2):
        sess.tick()
    sess.close()
    return sess


def test_replay_reproduces_labels_metrics_and_log_bytes():
    orig = scripted_session()
    back = replay(orig.log_text)
    assert np.array_equal(back.state.labels, orig.state.labels)
    assert back.checksum() == orig.checksum()
    assert back.metrics.rows == orig.metrics.rows
    assert back.log_text == orig.log_text


def test_replay_twice_is_idempotent():
    orig = scripted_session()
    assert replay(orig.log_text).checksum() == replay(orig.log_text).checksum()


def test_log_file_written_and_replayable(tmp_path):
    path = tmp_path / "run.seglog"
    orig = scripted_session(log_path=path)
    text = path.read_text(encoding="utf-8")
    assert text == orig.log_text
    assert replay(text).checksum() == orig.checksum()


def test_init_only_log_returns_initial_labels():
    sess, case = split_session()
    sess.close()
    lines = sess.log_text.splitlines()
    init_only = "\n".join(lines[:2]) + "\n"
    back = replay(init_only)
    assert np.array_equal(back.state.labels, case.reference)


def test_truncated_log_errors():
    orig = scripted_session()
    full = orig.log_text
    with pytest.raises(MalformedLogError):
        replay(full[:-1])  # missing trailing newline
    with pytest.raises(MalformedLogError):
        replay(full[: len(full) // 2].rsplit("\n", 1)[0])  # mid-stream cut
    # a stroke whose impulse line was lost
    lines = full.splitlines()
    idx = next(i for i, l in enumerate(lines) if l.startswith("stroke"))
    gutted = "\n".join(lines[: idx + 1] + lines[idx + 2 :]) + "\n"
    with pytest.raises(MalformedLogError):
        replay(gutted)


def test_tampered_header_digest_is_rejected():
    orig = scripted_session()
    lines = orig.log_text.splitlines()
    head = lines[0].split()
    head[2] = "0" * 12
    lines[0] = " ".join(head)
    with pytest.raises(ConfigDigestError):
        replay("\n".join(lines) + "\n")


def test_tampered_snapshot_is_rejected():
    orig = scripted_session()
    lines = orig.log_text.splitlines()
    idx = next(i for i, l in enumerate(lines) if l.startswith("snapshot"))
    lines[idx] = "snapshot deadbeef0000"
    with pytest.raises(ReplayChecksumError):
        replay("\n".join(lines) + "\n")


def test_unknown_event_kind_is_rejected():
    sess, _ = split_session()
    sess.close()
    with pytest.raises(MalformedLogError):
        replay(sess.log_text + "wobble\n")


def test_distance_session_replays_bit_identically():
    case = two_region_case(shape=(16, 16))
    cfg = SessionConfig(dynamics="distance", n_labels=2, seed=3)
    sess = start_session(case.img, {1: [(8, 4)], 2: [(8, 12), (2, 12)]}, cfg,
                         reference=case.reference)
    sess.tick()
    sess.ingest_stroke(Stroke(1, ((8, 11), (8, 12))))
    for _ in range(3):
        sess.tick()
    sess.close()
    back = replay(sess.log_text)
    assert np.array_equal(back.state.labels, sess.state.labels)
    assert back.metrics.rows == sess.metrics.rows


# ----------------------------------------------------------------- metrics


def test_lyapunov_csv_round_trips(tmp_path):
    sess = scripted_session()
    out = tmp_path / "trace.csv"
    sess.write_lyapunov_csv(out)
    rows = out.read_text().splitlines()
    assert rows[0] == "tick,t,V,E,Vhat,rate_condition,actuated,reclassified,dice"
    assert len(rows) == 1 + len(sess.metrics.rows)
    first = rows[1].split(",")
    assert first[0] == "0"
    assert float(first[2]) == sess.metrics.rows[0].V


def test_checksum_tracks_label_content():
    a = np.zeros((4, 4), dtype=np.int64)
    b = a.copy()
    assert labels_checksum(a) == labels_checksum(b)
    b[1, 1] = 2
    assert labels_checksum(a) != labels_checksum(b)
    assert labels_checksum(a) != labels_checksum(a.reshape(2, 8))


# ------------------------------------------------- error decomposition


def test_error_decomposition_partitions_and_identity():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(2, 5))
        labels = rng.integers(1, n + 1, size=(9, 9)).astype(np.int64)
        ref = rng.integers(1, n + 1, size=(9, 9)).astype(np.int64)
        dec = decompose_errors(labels, ref, n)
        for i in range(1, n + 1):
            cur = labels == i
            refm = ref == i
            assert np.array_equal(dec.correct[i] | dec.misclassified[i], cur)
            assert np.array_equal(dec.correct[i] | dec.unreached[i], refm)
            assert not (dec.correct[i] & dec.misclassified[i]).any()
            # misclassified of i = union over j != i of unreached_j within
            # the current region of i
            union = np.zeros_like(cur)
            for j in range(1, n + 1):
                if j != i:
                    union |= dec.unreached[j] & cur
            assert np.array_equal(dec.misclassified[i], union)
