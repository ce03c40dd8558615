import numpy as np
import pytest

from icbt.kernels import available_backends
from icbt.priors import Hyperparameters
from icbt.sampler import _Workspace

from conftest import random_state, round_robin_dataset

BACKENDS = available_backends()


@pytest.fixture
def workspace(rng):
    truth = random_state(rng, n=6, k_max=2, a_max=2)
    data = round_robin_dataset(rng, truth, m=4)
    return _Workspace(truth, data)


def test_both_backends_present_or_python_only():
    assert "python" in BACKENDS


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")
class TestBackendAgreement:
    def test_dataset_loglik_agrees(self, workspace):
        values = {
            name: mod.dataset_loglik(
                workspace.cp_slot, workspace.cp_i, workspace.cp_j, workspace.cp_w,
                workspace.cp_m, workspace.z, workspace.theta, workspace.r,
            )
            for name, mod in BACKENDS.items()
        }
        a, b = values["python"], values["compiled"]
        assert a == pytest.approx(b, abs=1e-10)

    def test_pair_sweep_agrees(self, workspace, rng):
        h = Hyperparameters.defaults(6)
        u = rng.random(workspace.n_free)
        results = {}
        for name, mod in BACKENDS.items():
            z = workspace.z.copy()
            occ = workspace.occ_z.copy()
            changed = mod.gibbs_pair_sweep(
                workspace.fp_i, workspace.fp_j, workspace.fp_w, workspace.fp_m,
                z, occ, workspace.theta, h.gamma_k, workspace.r, u,
            )
            results[name] = (changed, z, occ)
        assert results["python"][0] == results["compiled"][0]
        assert np.array_equal(results["python"][1], results["compiled"][1])
        assert np.array_equal(results["python"][2], results["compiled"][2])

    def test_object_sweep_agrees(self, workspace, rng):
        h = Hyperparameters.defaults(6)
        u = rng.random(workspace.n - 1)
        results = {}
        for name, mod in BACKENDS.items():
            y = workspace.y.copy()
            r = workspace.r.copy()
            occ = workspace.occ_y.copy()
            changed = mod.gibbs_object_sweep(
                workspace.adj_ptr, workspace.adj_opp, workspace.adj_w, workspace.adj_m,
                workspace.adj_slot, workspace.adj_sign, workspace.z, workspace.theta,
                workspace.phi, y, r, occ, h.gamma_a, u, 1, workspace.n,
            )
            results[name] = (changed, y, r, occ)
        assert results["python"][0] == results["compiled"][0]
        assert np.array_equal(results["python"][1], results["compiled"][1])
        assert np.allclose(results["python"][2], results["compiled"][2])
        assert np.array_equal(results["python"][3], results["compiled"][3])

    def test_many_random_sweeps_agree(self, rng):
        h = Hyperparameters.defaults(5)
        for trial in range(20):
            truth = random_state(rng, n=5, k_max=3, a_max=2)
            data = round_robin_dataset(rng, truth, m=2)
            ws = _Workspace(truth, data)
            u = rng.random(ws.n_free)
            outputs = []
            for name, mod in BACKENDS.items():
                z = ws.z.copy()
                occ = ws.occ_z.copy()
                mod.gibbs_pair_sweep(
                    ws.fp_i, ws.fp_j, ws.fp_w, ws.fp_m, z, occ, ws.theta,
                    h.gamma_k, ws.r, u,
                )
                outputs.append(z)
            assert np.array_equal(outputs[0], outputs[1])
