import numpy as np
import pytest

from flarepot.catalog import (
    apply_goes_scaling,
    flare_class_letter,
    format_flare_class,
    parse_flare_class,
)
from flarepot.errors import ParseError


class TestParseFlareClass:
    def test_x2_is_2e_minus_4(self):
        assert parse_flare_class("X2") == pytest.approx(2e-4, rel=1e-12)

    def test_x45_is_carrington_scale(self):
        assert parse_flare_class("X45") == pytest.approx(4.5e-3, rel=1e-12)

    def test_a1_is_class_ladder_base(self):
        assert parse_flare_class("A1") == pytest.approx(1e-8, rel=1e-12)

    @pytest.mark.parametrize("label,expected", [
        ("B7", 7e-7),
        ("C1.7", 1.7e-6),
        ("M5", 5e-5),
        ("M6.51", 6.51e-5),
        ("X9.3", 9.3e-4),
        ("x2", 2e-4),          # lower case tolerated
        (" M2.0 ", 2e-5),      # surrounding whitespace tolerated
    ])
    def test_ladder(self, label, expected):
        assert parse_flare_class(label) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("bad", ["", "Y2", "X", "2X", "X-3", "M2x", "X 2 3"])
    def test_malformed_labels_name_the_token(self, bad):
        with pytest.raises(ParseError) as err:
            parse_flare_class(bad)
        assert repr(bad) in str(err.value) or bad in str(err.value)

    def test_nonpositive_number_rejected(self):
        with pytest.raises(ParseError):
            parse_flare_class("X0")

    def test_non_string_rejected(self):
        with pytest.raises(ParseError):
            parse_flare_class(2e-4)


class TestFormatFlareClass:
    def test_canonical_examples(self):
        assert format_flare_class(2e-4) == "X2"
        assert format_flare_class(4.5e-3) == "X45"
        assert format_flare_class(9.3e-5) == "M9.3"
        assert format_flare_class(1e-8) == "A1"

    def test_round_trip_one_decimal_all_letters(self):
        # canonical labels: numbers in [1.0, 9.9] for A-M, X unbounded above
        for letter in "ABCM":
            for tenth in range(10, 100):
                label = f"{letter}{tenth / 10:.1f}".replace(".0", "")
                assert format_flare_class(parse_flare_class(label)) == label
        for tenth in range(10, 1000):
            label = f"X{tenth / 10:.1f}".replace(".0", "")
            assert format_flare_class(parse_flare_class(label)) == label

    def test_sub_a_fluxes_keep_the_a_letter(self):
        assert format_flare_class(5e-9) == "A0.5"

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            format_flare_class(0.0)

    def test_letter_buckets_cover_everything(self):
        assert flare_class_letter(2e-4) == "X"
        assert flare_class_letter(9.99e-5) == "M"
        assert flare_class_letter(1e-9) == "A"


class TestGoesScaling:
    def test_cancellation(self):
        assert apply_goes_scaling(7e-4) == pytest.approx(1e-3, rel=1e-12)

    def test_recorded_m651_becomes_x093_equivalent(self):
        # hand division: 6.51e-5 / 0.7 = 9.3e-5
        assert apply_goes_scaling(6.51e-5) == pytest.approx(9.3e-5, rel=1e-12)

    def test_factor_one_is_identity(self):
        assert apply_goes_scaling(3.3e-6, factor=1.0) == 3.3e-6

    def test_array_input(self):
        out = apply_goes_scaling(np.array([7e-4, 1.4e-3]))
        np.testing.assert_allclose(out, [1e-3, 2e-3], rtol=1e-12)

    def test_scaling_is_strictly_monotone(self, rng):
        fluxes = np.sort(rng.uniform(1e-6, 1e-3, size=100))
        scaled = apply_goes_scaling(fluxes)
        assert np.all(np.diff(scaled) > 0)

    @pytest.mark.parametrize("factor", [0.0, -0.5, 1.5])
    def test_bad_factor_rejected(self, factor):
        with pytest.raises(ValueError):
            apply_goes_scaling(1e-4, factor=factor)

    def test_nonpositive_flux_rejected(self):
        with pytest.raises(ValueError):
            apply_goes_scaling(-1e-4)
