from __future__ import annotations

import pytest

from marginal_evo.config import (
    DynamicsParams,
    EvolutionParams,
    FitnessWeights,
    derive_seed,
    load_config,
    reference_config,
    save_config,
    variant_from_tag,
)
from marginal_evo.errors import InvalidParameter, ParseError, ValidationError


class TestReferenceConfig:
    def test_reference_values_shared_by_all_tags(self):
        for tag in ("A", "B", "C"):
            cfg = reference_config(tag)
            d, e = cfg.dynamics, cfg.evolution
            assert (d.n_units, d.n_steps) == (256, 2000)
            assert d.dt == 0.05 and d.gamma == 1.0 and d.kappa == 1.0
            assert (e.population, e.generations) == (48, 100)
            assert (e.init_low, e.init_high) == (0.30, 1.30)
            assert e.mut_std0 == 0.02 and e.mut_decay == 0.98
            assert e.n_seeds == 4

    def test_horizon_over_units_ratio(self):
        cfg = reference_config("B")
        assert cfg.dynamics.horizon == 100.0
        assert cfg.dynamics.horizon / cfg.dynamics.n_units == 0.390625

    def test_model_c_has_phases(self):
        cfg = reference_config("C")
        assert cfg.variant.ensemble == "phased_ginibre"
        assert cfg.variant.phase_std == 0.3

    def test_model_a_drops_critical_anchor(self):
        cfg = reference_config("A")
        assert cfg.fitness.w_crit == 0.0
        assert cfg.variant.ensemble == "ginibre"

    def test_model_b_symmetric_with_anchor(self):
        cfg = reference_config("B")
        assert cfg.variant.ensemble == "real_symmetric"
        assert cfg.fitness.w_crit > 0.0

    def test_mutation_schedule_is_exact(self):
        evo = reference_config("A").evolution
        for k in range(0, 120, 7):
            assert evo.mut_std_at(k) == 0.02 * 0.98**k


class TestRoundTrip:
    @pytest.mark.parametrize("tag", ["A", "B", "C"])
    def test_save_load_identity(self, tag, tmp_path):
        cfg = reference_config(tag, master_seed=987654321, out_dir="some/dir")
        path = tmp_path / "exp.txt"
        save_config(cfg, path)
        assert load_config(path) == cfg

    def test_non_default_floats_roundtrip(self, tmp_path):
        cfg = reference_config("C").replace(
            dynamics=DynamicsParams(n_units=64, n_steps=500, dt=0.012345678901234567,
                                    gamma=0.75, kappa=1.25),
        )
        path = tmp_path / "exp.txt"
        save_config(cfg, path)
        assert load_config(path) == cfg


def _write(tmp_path, text):
    path = tmp_path / "cfg.txt"
    path.write_text(text)
    return path


class TestLoadErrors:
    def test_reference_file_parses(self, tmp_path):
        path = tmp_path / "c.txt"
        save_config(reference_config("C"), path)
        cfg = load_config(path)
        assert cfg.dynamics.n_units == 256

    def test_zero_dt_names_field(self, tmp_path):
        path = tmp_path / "c.txt"
        save_config(reference_config("C"), path)
        text = path.read_text().replace("dt = 0.05", "dt = 0")
        with pytest.raises(ValidationError) as err:
            load_config(_write(tmp_path, text))
        assert "dt" in str(err.value)

    def test_model_a_with_anchor_rejected(self, tmp_path):
        path = tmp_path / "a.txt"
        save_config(reference_config("A"), path)
        text = path.read_text().replace("w_crit = 0.0", "w_crit = 1.0")
        with pytest.raises(ValidationError) as err:
            load_config(_write(tmp_path, text))
        assert "w_crit" in str(err.value)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "c.txt"
        save_config(reference_config("C"), path)
        text = path.read_text().replace("gamma = 1.0", "gamma = 1.0\nwhatever = 3")
        with pytest.raises(ValidationError) as err:
            load_config(_write(tmp_path, text))
        assert "whatever" in str(err.value)

    def test_unknown_section_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            load_config(_write(tmp_path, "schema = 1\n[nonsense]\nx = 1\n"))

    def test_garbage_line_is_parse_error(self, tmp_path):
        with pytest.raises(ParseError):
            load_config(_write(tmp_path, "schema = 1\n[dynamics]\nnot a kv line\n"))

    def test_duplicate_key_is_parse_error(self, tmp_path):
        path = tmp_path / "c.txt"
        save_config(reference_config("C"), path)
        text = path.read_text().replace("gamma = 1.0", "gamma = 1.0\ngamma = 2.0")
        with pytest.raises(ParseError):
            load_config(_write(tmp_path, text))

    def test_missing_schema_rejected(self, tmp_path):
        path = tmp_path / "c.txt"
        save_config(reference_config("C"), path)
        text = "\n".join(path.read_text().splitlines()[1:])
        with pytest.raises(ValidationError) as err:
            load_config(_write(tmp_path, text))
        assert "schema" in str(err.value)

    def test_missing_key_rejected(self, tmp_path):
        path = tmp_path / "c.txt"
        save_config(reference_config("C"), path)
        text = path.read_text().replace("kappa = 1.0\n", "")
        with pytest.raises(ValidationError) as err:
            load_config(_write(tmp_path, text))
        assert "kappa" in str(err.value)


class TestValidation:
    def test_variant_consistency(self):
        with pytest.raises(ValidationError):
            variant_from_tag("C", phase_std=0.0).validate()
        with pytest.raises(ValidationError):
            variant_from_tag("D")

    def test_ensemble_must_match_tag(self):
        from marginal_evo.config import ModelVariant

        with pytest.raises(ValidationError):
            ModelVariant(tag="A", ensemble="real_symmetric").validate()

    def test_dynamics_bounds(self):
        for kv in ({"n_units": 1}, {"n_steps": 1}, {"dt": -0.1}, {"gamma": 0.0},
                   {"kappa": 0.0}):
            with pytest.raises(ValidationError):
                DynamicsParams(**kv).validate()

    def test_evolution_bounds(self):
        for kv in ({"population": 0}, {"generations": 0}, {"init_low": 2.0},
                   {"mut_decay": 0.0}, {"mut_decay": 1.5}, {"beta0": 0.0},
                   {"beta_growth": 0.99}, {"clip_low": 0.5}, {"clip_high": 1.0},
                   {"n_seeds": 0}):
            with pytest.raises(ValidationError):
                EvolutionParams(**kv).validate()

    def test_fitness_bounds(self):
        with pytest.raises(ValidationError):
            FitnessWeights(w_spec=-1.0).validate()
        with pytest.raises(ValidationError):
            FitnessWeights(band_min=3.0, band_max=2.0).validate()

    def test_cross_field_w_crit(self):
        cfg = reference_config("B")
        with pytest.raises(ValidationError):
            cfg.replace(fitness=FitnessWeights(w_crit=0.0))


class TestDeriveSeed:
    def test_deterministic(self):
        assert derive_seed(7, 0, 0, 0) == derive_seed(7, 0, 0, 0)

    def test_distinct_on_neighbors(self):
        base = derive_seed(7, 0, 0, 0)
        assert base != derive_seed(7, 0, 0, 1)
        assert base != derive_seed(7, 0, 1, 0)
        assert base != derive_seed(7, 1, 0, 0)
        assert base != derive_seed(8, 0, 0, 0)

    def test_full_tuple_grid_collision_free(self):
        seeds = {
            derive_seed(123, g, i, r)
            for g in range(100)
            for i in range(48)
            for r in range(4)
        }
        assert len(seeds) == 100 * 48 * 4

    def test_negative_index_rejected(self):
        with pytest.raises(InvalidParameter):
            derive_seed(1, -1, 0, 0)

    def test_fits_u64(self):
        s = derive_seed(2**64 - 1, 10_000, 1_000_002, 99)
        assert 0 <= s < 2**64
