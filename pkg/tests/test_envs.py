import json

import numpy as np
import pytest

from conformal_teleop.envs import arm, catalog, core, grid, schemes
from conformal_teleop.rng import Xoshiro256


def dataset_equal(a, b) -> bool:
    if len(a.trajectories) != len(b.trajectories):
        return False
    for t1, t2 in zip(a.trajectories, b.trajectories):
        if not (np.array_equal(t1.states, t2.states)
                and np.array_equal(t1.inputs, t2.inputs)
                and np.array_equal(t1.actions, t2.actions)):
            return False
    return True


class TestGridPreference:
    def test_count_and_balance(self):
        ds = grid.gen_grid_preference(24, seed=1)
        assert len(ds.trajectories) == 48

    def test_every_trajectory_ends_at_goal(self):
        ds = grid.gen_grid_preference(3, seed=2)
        for tr in ds.trajectories:
            assert tuple(tr.states[-1]) == grid.PREF_GOAL

    def test_branch_cell_opposite_y_actions(self):
        ds = grid.gen_grid_preference(1, seed=3)
        up, down = ds.trajectories
        branch_actions = {}
        for tr, mode in ((up, "up"), (down, "down")):
            for t in range(len(tr)):
                if tuple(tr.states[t]) == grid.PREF_BRANCH:
                    branch_actions[mode] = tr.actions[t]
        assert branch_actions["up"][1] == -branch_actions["down"][1] != 0
        assert branch_actions["up"][0] == branch_actions["down"][0] == 0

    def test_constant_unit_input(self):
        ds = grid.gen_grid_preference(2, seed=4)
        for tr in ds.trajectories:
            assert np.all(tr.inputs == 1.0)

    def test_noiseless_determinism(self):
        assert dataset_equal(grid.gen_grid_preference(4, seed=9),
                             grid.gen_grid_preference(4, seed=10))

    def test_replay(self):
        assert grid.gen_grid_preference(2, seed=5).replay_ok()

    def test_actions_on_unit_lattice(self):
        ds = grid.gen_grid_preference(2, seed=6)
        for tr in ds.trajectories:
            assert set(np.unique(tr.actions)) <= {-1.0, 0.0, 1.0}


class TestGridPrecision:
    def test_zero_noise_paths_are_shortest(self):
        ds = grid.gen_grid_precision(12, noise_sigma=0.0, seed=7)
        for tr in ds.trajectories:
            x0, y0 = tr.states[0]
            to_entrance = max(grid.PREC_ENTRANCE[0] - x0, abs(grid.PREC_TUNNEL_Y - y0))
            to_goal = grid.PREC_GOAL[0] - grid.PREC_ENTRANCE[0]
            assert len(tr) == to_entrance + to_goal

    def test_tunnel_steps_identical_across_trajectories(self):
        ds = grid.gen_grid_precision(10, noise_sigma=0.7, seed=8)
        actions_at = {}
        for tr in ds.trajectories:
            for t in range(len(tr)):
                cell = tuple(tr.states[t])
                if grid.in_tunnel(cell):
                    actions_at.setdefault(cell, set()).add(tuple(tr.actions[t]))
        assert actions_at
        for cell, acts in actions_at.items():
            assert len(acts) == 1

    def test_open_region_variance_exceeds_tunnel(self):
        ds = grid.gen_grid_precision(40, noise_sigma=0.55, seed=9)
        per_cell = {}
        for tr in ds.trajectories:
            for t in range(len(tr)):
                per_cell.setdefault(tuple(tr.states[t]), []).append(tr.actions[t])
        open_vars, tunnel_vars = [], []
        for cell, acts in per_cell.items():
            if len(acts) < 3:
                continue
            var = float(np.var(np.asarray(acts), axis=0).mean())
            if grid.in_tunnel(cell):
                tunnel_vars.append(var)
            elif cell[0] < grid.PREC_NOISY_X_MAX:
                open_vars.append(var)
        assert np.mean(open_vars) > np.mean(tunnel_vars) == 0.0

    def test_replay_and_goal(self):
        ds = grid.gen_grid_precision(6, noise_sigma=0.55, seed=10)
        assert ds.replay_ok()
        for tr in ds.trajectories:
            assert tuple(tr.states[-1]) == grid.PREC_GOAL

    def test_determinism(self):
        assert dataset_equal(grid.gen_grid_precision(5, 0.55, seed=3),
                             grid.gen_grid_precision(5, 0.55, seed=3))
        assert not dataset_equal(grid.gen_grid_precision(5, 0.55, seed=3),
                                 grid.gen_grid_precision(5, 0.55, seed=4))

    def test_train_calib_split_disjoint(self):
        entry = catalog.get_scenario("grid-precision")
        train = entry.gen_train(5)
        calib = entry.gen_calib("standard", 5)
        assert len(calib.trajectories) == 36
        train_keys = {tr.states.tobytes() for tr in train.trajectories}
        calib_keys = {tr.states.tobytes() for tr in calib.trajectories}
        assert not (train_keys & calib_keys)


class TestArmFk:
    def test_straight_arm(self):
        x, y = arm.arm_fk([0.0, 0.0, 0.0], (1.0, 1.0, 1.0))
        assert (x, y) == pytest.approx((3.0, 0.0))

    def test_vertical_arm(self):
        x, y = arm.arm_fk([np.pi / 2, 0.0, 0.0], (1.0, 1.0, 1.0))
        assert (x, y) == pytest.approx((0.0, 3.0), abs=1e-12)

    def test_matches_accumulation_oracle(self):
        rng = Xoshiro256(11)
        lengths = arm.LINK_LENGTHS
        for _ in range(50):
            theta = [rng.uniform(-2, 2) for _ in range(3)]
            angle = 0.0
            ox = oy = 0.0
            for length, joint in zip(lengths, theta):
                angle += joint
                ox += length * np.cos(angle)
                oy += length * np.sin(angle)
            x, y = arm.arm_fk(theta)
            assert (x, y) == pytest.approx((ox, oy), rel=1e-12)

    def test_wrong_arity_rejected(self):
        with pytest.raises(ValueError):
            arm.arm_fk([0.0, 0.0])


class TestArmGoal:
    def test_counts(self):
        ds = arm.gen_arm_goal(60, goals=("blue", "red"), seed=1)
        assert len(ds.trajectories) == 120

    def test_reaches_goal_within_tolerance(self):
        ds = arm.gen_arm_goal(4, goals=("blue",), seed=2)
        goal = np.asarray(arm.GOALS["blue"])
        for tr in ds.trajectories:
            ee = np.asarray(arm.arm_fk(tr.states[-1]))
            assert np.linalg.norm(ee - goal) <= 0.05

    def test_expert_monotonically_approaches(self):
        ds = arm.gen_arm_goal(5, goals=("red",), profile="expert_direct", seed=3)
        goal = np.asarray(arm.GOALS["red"])
        for tr in ds.trajectories:
            dists = [np.linalg.norm(np.asarray(arm.arm_fk(s)) - goal) for s in tr.states]
            assert all(b < a for a, b in zip(dists, dists[1:]))

    def test_indirect_detours(self):
        ds = arm.gen_arm_goal(6, goals=("blue",), profile="indirect", seed=4)
        goal = np.asarray(arm.GOALS["blue"])
        amplitude = arm.PROFILES["indirect"].detour_amplitude
        for tr in ds.trajectories:
            dists = [np.linalg.norm(np.asarray(arm.arm_fk(s)) - goal) for s in tr.states]
            increases = [b - a for a, b in zip(dists, dists[1:])]
            assert max(increases) > amplitude / 2

    def test_unreachable_goal_raises(self):
        with pytest.raises(arm.GenerationError):
            arm._check_reachable((5.0, 5.0))

    def test_replay_and_determinism(self):
        a = arm.gen_arm_goal(3, goals=("blue",), seed=5)
        b = arm.gen_arm_goal(3, goals=("blue",), seed=5)
        assert a.replay_ok()
        assert dataset_equal(a, b)


class TestArmGrasp:
    def test_counts(self):
        ds = arm.gen_arm_grasp(7, seed=1)
        assert len(ds.trajectories) == 14

    def test_final_poses_cluster_into_two_modes(self):
        ds = arm.gen_arm_grasp(7, seed=2)
        finals = np.asarray([tr.states[-1] for tr in ds.trajectories])
        # 2-means on final joint vectors: mode split must match generation order
        handle, lip = finals[:7], finals[7:]
        inertia_split = (np.sum((handle - handle.mean(0)) ** 2)
                         + np.sum((lip - lip.mean(0)) ** 2))
        inertia_all = np.sum((finals - finals.mean(0)) ** 2)
        assert inertia_split < 0.5 * inertia_all
        assert np.linalg.norm(handle.mean(0) - lip.mean(0)) > 0.2

    def test_precision_variant_jitter_schedule(self):
        profile = arm.PROFILES["low_precision"]
        near = arm.jitter_sigma(profile, 0.05)
        start = arm.jitter_sigma(profile, 1.0)
        assert near < 0.25 * start

    def test_precision_variant_generates(self):
        ds = arm.gen_arm_grasp(2, modes=("handle",), seed=3, profile="low_precision")
        assert ds.replay_ok()
        target = np.asarray(arm.GRASP_TARGETS["handle"])
        for tr in ds.trajectories:
            ee = np.asarray(arm.arm_fk(tr.states[-1]))
            assert np.linalg.norm(ee - target) <= 0.05


class TestLabelSchemes:
    def test_straight_x_motion(self):
        # arm poses marching the end effector along +x
        env = arm.make_env()
        states = [np.array([0.4, 0.3, 0.2])]
        for _ in range(5):
            states.append(states[-1] + arm.dls_joint_step(states[-1], (2.0, 0.4), ee_step=0.05))
        tr = core.Trajectory(states=np.asarray(states),
                             inputs=np.zeros((5, 2)),
                             actions=np.diff(np.asarray(states), axis=0))
        labels = schemes.label_lowdim(tr, schemes.SCHEMES["heuristic_xy"], 0, env)
        points = np.asarray([arm.arm_fk(s) for s in states])
        deltas = (points[1:] - points[:-1]) / env.input_step_ref
        assert labels == pytest.approx(deltas)

    def test_quarter_turn_rotation(self):
        env = grid.precision_env()
        states = np.array([[0.0, 5.0], [1.0, 5.0], [2.0, 5.0]])
        tr = core.Trajectory(states=states, inputs=np.zeros((2, 1)),
                             actions=np.diff(states, axis=0))
        rotated = schemes.InputScheme("quarter", rotation_deg=90.0)
        labels = schemes.label_lowdim(tr, rotated, 0, env)
        assert labels[0] == pytest.approx([0.0, 1.0], abs=1e-12)

    def test_degenerate_noisy_human_equals_heuristic(self):
        env = grid.precision_env()
        states = np.array([[0.0, 5.0], [1.0, 6.0], [2.0, 6.0]])
        tr = core.Trajectory(states=states, inputs=np.zeros((2, 1)),
                             actions=np.diff(states, axis=0))
        degenerate = schemes.InputScheme("plain", rotation_deg=0.0, noise_sigma=0.0, gain=1.0)
        base = schemes.label_lowdim(tr, schemes.SCHEMES["heuristic_xy"], 3, env)
        assert schemes.label_lowdim(tr, degenerate, 3, env) == pytest.approx(base)

    def test_noise_is_seeded(self):
        env = arm.make_env()
        ds = arm.gen_arm_goal(1, goals=("blue",), seed=6)
        tr = ds.trajectories[0]
        noisy = schemes.noisy_human(2)
        l1 = schemes.label_lowdim(tr, noisy, 5, env)
        l2 = schemes.label_lowdim(tr, noisy, 5, env)
        l3 = schemes.label_lowdim(tr, noisy, 6, env)
        assert np.array_equal(l1, l2)
        assert not np.array_equal(l1, l3)

    def test_ladder_order(self):
        assert schemes.SCHEME_LADDER[0] == "heuristic_xy"
        assert len(schemes.SCHEME_LADDER) == 5
        assert schemes.noisy_human(3).rotation_deg == 60.0

    def test_short_trajectory_rejected(self):
        env = arm.make_env()
        tr = core.Trajectory(states=np.zeros((1, 3)), inputs=np.zeros((0, 2)),
                             actions=np.zeros((0, 3)))
        with pytest.raises(ValueError):
            schemes.label_lowdim(tr, schemes.SCHEMES["heuristic_xy"], 0, env)


class TestDatasetIo:
    def test_jsonl_round_trip(self, tmp_path):
        ds = arm.gen_arm_goal(2, goals=("blue",), seed=8)
        ds = schemes.relabel_dataset(ds, schemes.SCHEMES["heuristic_xy"], 8)
        path = tmp_path / "ds.jsonl"
        core.save_jsonl(ds, path)
        loaded = catalog.load_dataset(path)
        assert dataset_equal(ds, loaded)
        assert loaded.env.name == ds.env.name
        assert loaded.scheme == "heuristic_xy"

    def test_jsonl_bytes_deterministic(self, tmp_path):
        ds = grid.gen_grid_precision(3, 0.55, seed=12)
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        core.save_jsonl(ds, p1)
        core.save_jsonl(grid.gen_grid_precision(3, 0.55, seed=12), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        with pytest.raises(ValueError):
            catalog.load_dataset(path)

    def test_triples_match_dataset(self):
        ds = grid.gen_grid_preference(1, seed=3)
        triples = list(ds.triples())
        assert len(triples) == ds.n_steps()
        first = triples[0]
        assert np.array_equal(first.state, ds.trajectories[0].states[0])
        assert np.array_equal(first.action, ds.trajectories[0].actions[0])

    def test_action_equals_state_difference(self):
        for ds in (grid.gen_grid_precision(3, 0.55, seed=1),
                   arm.gen_arm_goal(2, goals=("red",), seed=1)):
            for tr in ds.trajectories:
                diffs = np.diff(tr.states, axis=0)
                assert np.allclose(diffs, tr.actions, atol=1e-12)


class TestEnvDynamics:
    def test_grid_clips_to_bounds(self):
        env = grid.precision_env()
        state = env.step(np.array([24.0, 24.0]), np.array([5.0, 5.0]))
        assert np.all(state <= core.GRID_MAX)

    def test_grid_blocks_obstacles(self):
        env = grid.precision_env()
        wall = next(iter(env.obstacles))
        start = np.array([wall[0] - 1.0, wall[1]])
        after = env.step(start, np.array([1.0, 0.0]))
        assert np.array_equal(after, start)

    def test_arm_wraps_angles(self):
        env = arm.make_env()
        state = env.step(np.array([3.1, 0.0, 0.0]), np.array([0.2, 0.0, 0.0]))
        assert -np.pi <= state[0] < np.pi

    def test_wrap_identity_in_range(self):
        theta = np.array([0.1, -1.5, 3.0])
        assert np.array_equal(core.wrap_angles(theta), theta)

    def test_catalog_descriptions(self):
        entries = catalog.describe_catalog()
        assert {e["id"] for e in entries} == set(catalog.SCENARIOS)
        for e in entries:
            assert e["default_beta"] > 0
            json.dumps(e)  # JSON-serializable for the /scenarios endpoint
