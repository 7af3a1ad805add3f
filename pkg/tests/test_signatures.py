"""
Tests for transition signatures, the library and its on-disk cache
"""
import json

import numpy as np
import pytest

from grid.model import SwitchStatus
from grid.network import parse_network
from signatures.cache import FORMAT_NAME, LibraryCacheError, load_library, save_library
from signatures.library import (
    InadmissibleKeyError,
    SignatureKey,
    UnobservableSignatureError,
    build_library,
    compute_signatures,
    difference_matrix,
    is_admissible_key,
    particular_library,
    rank_one_ratio,
    restrict_and_normalize,
    signature_keys,
)
from signatures.placement import Placement, load_placement, named_placements, save_placement


def test_ieee33_has_eighty_keys(grid):
    """Test 5 breakers x 16 contexts, all admissible"""
    keys = signature_keys(grid)
    assert len(keys) == 80
    assert keys[0] == SignatureKey(breaker=1, context=(0, 0, 0, 0))
    assert [k.breaker for k in keys] == sorted(k.breaker for k in keys)


def test_signature_key_sides():
    key = SignatureKey.of(SwitchStatus.parse("1,1,1,0,1"), 4)
    assert str(key) == "S4|1111"
    assert key.open_status() == SwitchStatus.parse("1,1,1,0,1")
    assert key.closed_status() == SwitchStatus.parse("1,1,1,1,1")


def test_ring_skips_islanding_keys(ring):
    """Test that a breaker whose opening islands a bus has no signature"""
    keys = signature_keys(ring)
    assert keys == [SignatureKey(breaker=1, context=(1,))]
    assert not is_admissible_key(ring, SignatureKey(breaker=2, context=(1,)))
    with pytest.raises(InadmissibleKeyError):
        difference_matrix(ring, SignatureKey(breaker=2, context=(0,)))


def test_difference_is_rank_one(grid, cache):
    """Test sigma_2 / sigma_1 of X_closed - X_open for every key"""
    for key in signature_keys(grid):
        assert rank_one_ratio(grid, key, cache) <= 1e-8


def test_signatures_vanish_at_slack(signatures):
    for vector in signatures.values():
        assert vector[0] == 0
        assert np.linalg.norm(vector) > 0


def test_signatures_span_difference_range(grid, cache, signatures):
    """Test that the signature is the range direction of the difference matrix"""
    key = SignatureKey.of(SwitchStatus.parse("1,1,1,0,1"), 4)
    D = difference_matrix(grid, key, cache)
    column = D[:, int(np.argmax(np.linalg.norm(D, axis=0)))]
    column = column - column[0]
    g = signatures[key]
    cosine = abs(np.vdot(column, g)) / (np.linalg.norm(column) * np.linalg.norm(g))
    assert cosine == pytest.approx(1.0, abs=1e-9)


def test_compute_signatures_workers_agree(grid, cache, signatures):
    threaded = compute_signatures(grid, cache, workers=4)
    assert list(threaded) == list(signatures)
    for key, vector in signatures.items():
        np.testing.assert_array_equal(threaded[key], vector)


def test_library_vectors_are_unit(libraries):
    for library in libraries.values():
        assert len(library) == 80
        for vector in library.entries.values():
            assert vector.shape == (library.placement.p,)
            assert abs(np.linalg.norm(vector) - 1.0) <= 1e-12


def test_library_matrix_shape(libraries):
    library = libraries["P7"]
    assert library.matrix().shape == (7, 80)


@pytest.mark.parametrize("name", ["P33", "P15", "P7"])
def test_particular_library_one_per_breaker(libraries, name):
    library = libraries[name]
    sigma = SwitchStatus.parse("1,1,1,0,1")
    candidates = library.particular(sigma)
    assert [c.breaker for c in candidates] == [1, 2, 3, 4, 5]
    for candidate in candidates:
        assert candidate.status_after == sigma.toggle(candidate.breaker)
        key = SignatureKey.of(sigma, candidate.breaker)
        np.testing.assert_array_equal(candidate.vector, library.vector(key))
    assert library.particular(sigma) is candidates


def test_particular_library_rejects_wrong_width(libraries):
    with pytest.raises(ValueError):
        particular_library(libraries["P7"], SwitchStatus.parse("1,1,1"))


def test_particular_library_on_ring(ring):
    library = build_library(ring, Placement.full(ring))
    assert [c.breaker for c in library.particular(SwitchStatus(bits=(1, 1)))] == [1]
    assert [c.breaker for c in library.particular(SwitchStatus(bits=(0, 1)))] == [1]


def test_slack_only_placement_is_unobservable(grid, signatures):
    key = next(iter(signatures))
    with pytest.raises(UnobservableSignatureError) as exc:
        restrict_and_normalize(signatures[key], Placement(buses=(1,)), grid, key)
    assert exc.value.key == key


def test_build_library_reports_unobservable_key(grid, signatures):
    with pytest.raises(UnobservableSignatureError):
        build_library(grid, Placement(buses=(1,)), signatures)


def test_cache_round_trip_is_exact(grid, libraries, tmp_path):
    """Test that a saved library loads back bit-identical"""
    path = tmp_path / "library.json"
    library = libraries["P15"]
    save_library(library, path)

    loaded = load_library(path, grid)
    assert loaded.placement == library.placement
    assert loaded.fingerprint == grid.fingerprint
    assert loaded.keys() == library.keys()
    for key in library.keys():
        np.testing.assert_array_equal(loaded.vector(key), library.vector(key))


def test_cache_rejects_other_grid(libraries, tmp_path):
    other = parse_network(
        "# base_kv = 1\n# base_mva = 1\n[buses]\nbus_id,P_kW,Q_kvar,is_slack\n"
        "1,0,0,1\n2,1,1,0\n[lines]\nfrom_bus,to_bus,R_ohm,X_ohm,switch_id\n1,2,1,1,\n"
    )
    path = tmp_path / "library.json"
    save_library(libraries["P7"], path)
    with pytest.raises(LibraryCacheError):
        load_library(path, other)


def test_cache_rejects_wrong_version(libraries, tmp_path):
    path = tmp_path / "library.json"
    save_library(libraries["P7"], path)
    document = json.loads(path.read_text())
    assert document["format"] == FORMAT_NAME
    document["version"] = 99
    path.write_text(json.dumps(document))
    with pytest.raises(LibraryCacheError):
        load_library(path)


def test_cache_rejects_garbage(tmp_path):
    path = tmp_path / "library.json"
    path.write_text("not json")
    with pytest.raises(LibraryCacheError):
        load_library(path)
    with pytest.raises(FileNotFoundError):
        load_library(tmp_path / "missing.json")


def test_load_placement_forms(grid, tmp_path):
    """Test shipped names, inline lists and JSON files"""
    assert load_placement("P33", grid).p == 33
    assert load_placement("P7", grid).buses == (9, 12, 15, 18, 24, 27, 30)
    assert load_placement("9, 12,15", grid).buses == (9, 12, 15)

    path = tmp_path / "mine.json"
    save_placement(Placement(name="mine", buses=(2, 5)), path)
    assert load_placement(str(path), grid) == Placement(name="mine", buses=(2, 5))

    with pytest.raises(ValueError):
        load_placement("P99", grid)
    with pytest.raises(ValueError):
        load_placement("1,2,40", grid)
    with pytest.raises(ValueError):
        Placement(buses=(3, 3))


def test_named_placements(grid):
    names = [p.name for p in named_placements(grid)]
    assert names == ["P15", "P33", "P7"]


def test_placement_selection_matrix(grid):
    placement = Placement(buses=(3, 1))
    I_P = placement.selection_matrix(grid)
    assert I_P.shape == (2, 33)
    assert I_P[0, 2] == 1 and I_P[1, 0] == 1
    assert I_P.sum() == 2
    assert placement.with_bus(2).buses == (1, 2, 3)
