from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pairbounds.data import (
    AllBlocksEmpty,
    DuplicateHousehold,
    HouseholdRecord,
    ParseError,
    array_to_records,
    empirical_cells,
    exact_cells,
    ingest,
    write_long,
    write_wide,
)
from pairbounds.simulate import TypeDgp, population_cells, sample_dataset
from pairbounds.typespace import TypeSpaceConfig, random_admissible_pairs

WIDE = "household_id,y1,d1,z1,y2,d2,z2\n"


def write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestIngest:
    def test_wide(self, tmp_path):
        path = write(tmp_path, WIDE + "a,1,0,1,0,1,0\nb,0,0,0,0,0,0\nc,1,1,1,1,1,1\n")
        recs = ingest(path)
        assert len(recs) == 3
        assert recs[0] == HouseholdRecord("a", 1, 0, 1, 0, 1, 0)

    def test_non_binary_value_reports_row(self, tmp_path):
        path = write(tmp_path, WIDE + "a,1,0,1,0,1,0\nb,2,0,0,0,0,0\n")
        with pytest.raises(ParseError) as err:
            ingest(path)
        assert "3" in str(err.value)

    def test_duplicate_household(self, tmp_path):
        path = write(tmp_path, WIDE + "a,1,0,1,0,1,0\na,0,0,0,0,0,0\n")
        with pytest.raises(DuplicateHousehold):
            ingest(path)

    def test_bad_header(self, tmp_path):
        path = write(tmp_path, "id,y,d\n1,0,0\n")
        with pytest.raises(ParseError):
            ingest(path)

    def test_long_matches_wide(self, tmp_path):
        arr = sample_dataset(_dgp(0), 50, seed=1)
        recs = array_to_records(arr)
        write_wide(recs, tmp_path / "w.csv")
        write_long(recs, tmp_path / "l.csv", role_labels=("man", "woman"))
        wide = ingest(tmp_path / "w.csv")
        long = ingest(tmp_path / "l.csv", schema="long", role_map={"man": 1, "woman": 2})
        assert wide == long == recs

    def test_long_incomplete_household(self, tmp_path):
        path = write(tmp_path, "household_id,role,y,d,z\na,1,0,0,0\n")
        with pytest.raises(ParseError):
            ingest(path, schema="long")


class TestCells:
    def test_single_record(self):
        obs = empirical_cells([HouseholdRecord("a", 1, 1, 1, 0, 0, 0)])
        assert obs.active_blocks == (2,)
        assert obs.block(2)[8 + 2] == 1.0
        assert obs.cells.sum() == 1.0

    def test_balanced_blocks(self):
        arr = np.array([[0, 0, z1, 0, 0, z2] for z1 in (0, 1) for z2 in (0, 1)] * 5)
        obs = empirical_cells(arr)
        assert obs.active_blocks == (0, 1, 2, 3)
        assert (obs.n_z == 5).all()

    def test_empty_input(self):
        with pytest.raises(AllBlocksEmpty):
            empirical_cells([])

    @given(st.integers(0, 2**31 - 1), st.integers(1, 300))
    def test_blocks_normalise_exactly(self, seed, n):
        arr = np.random.default_rng(seed).integers(0, 2, size=(n, 6))
        cells = exact_cells(arr)
        obs = empirical_cells(arr)
        for k in obs.active_blocks:
            assert sum(cells[16 * k: 16 * k + 16]) == Fraction(1)

    def test_large_sample_converges(self):
        dgp = _dgp(3)
        obs = empirical_cells(sample_dataset(dgp, 100_000, seed=2))
        assert np.abs(obs.cells - population_cells(dgp).cells).max() < 0.01


def _dgp(seed):
    rng = np.random.default_rng(seed)
    s, s2, e = random_admissible_pairs(TypeSpaceConfig(), 4, rng)
    return TypeDgp(s, s2, e, rng.dirichlet(np.ones(4)))
