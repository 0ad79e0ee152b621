import pytest
from hypothesis import given, settings, strategies as st

from src.engine.exceptions import SolutionFormatError
from src.engine.solution import (
    BurnArc,
    Flyby,
    Launch,
    Rendezvous,
    format_real,
    lint_solution,
    parse_solution,
    serialize_solution,
    significant_digits,
)

T0 = 64400.0


def state_line(ship=1, event=0, t=T0, r=(1.5e8, 2.0e7, 1.0e5), v=(-4.0, 29.5, 0.1), m=2000.0):
    return " ".join(str(x) for x in (ship, event, t, *r, *v, m))


def burn_block(ship=1, t0=T0 + 10.0, epochs=(0.0, 1.0, 2.0), thrust=(0.1, 0.2, 0.3)):
    lines = [f"{ship} -1 {t0} 0 0 0"]
    lines += [f"{ship} -1 {t0 + dt} {thrust[0]} {thrust[1]} {thrust[2]}" for dt in epochs]
    lines.append(f"{ship} -1 {t0 + epochs[-1]} 0 0 0")
    return lines


def launch(ship=1, t=T0):
    return [state_line(ship, 0, t, v=(-4.0, 29.5, 0.1)), state_line(ship, 0, t, v=(-2.0, 31.0, 0.5))]


def text_of(lines):
    return "\n".join(lines) + "\n"


def codes(text):
    with pytest.raises(SolutionFormatError) as error:
        parse_solution(text)
    return [diagnostic.code for diagnostic in error.value.diagnostics]


class TestParseSolution:
    def test_minimal_launch(self):
        doc = parse_solution(text_of(launch()))
        assert len(doc.ships) == 1
        (event,) = doc.ships[0].events
        assert isinstance(event, Launch)
        assert event.before.v == (-4.0, 29.5, 0.1)
        assert event.after.v == (-2.0, 31.0, 0.5)
        assert event.pre.line_no == 1 and event.post.line_no == 2

    def test_full_ship_is_grouped(self):
        lines = launch()
        lines += burn_block(t0=T0 + 10.0, epochs=(0.0, 1.0, 2.0, 2.5))
        lines += [state_line(event=1234, t=T0 + 50.0), state_line(event=1234, t=T0 + 50.0, m=1960.0)]
        lines += [state_line(event=-3, t=T0 + 700.0, m=1960.0)] * 2
        doc = parse_solution(text_of(lines))
        launch_event, arc, rendezvous, flyby = doc.ships[0].events
        assert isinstance(launch_event, Launch)
        assert isinstance(arc, BurnArc) and len(arc.lines) == 6
        assert arc.start == T0 + 10.0 and arc.end == T0 + 12.5
        assert len(arc.profile()) == 4
        assert isinstance(rendezvous, Rendezvous) and rendezvous.asteroid_id == 1234
        assert isinstance(flyby, Flyby) and flyby.planet.name == "EARTH"
        assert doc.line_index[(1, 2)] == 9

    def test_two_ships(self):
        doc = parse_solution(text_of(launch(1) + launch(2, T0 + 5.0)))
        assert [ship.ship_id for ship in doc.ships] == [1, 2]

    def test_crlf_accepted(self):
        doc = parse_solution("\r\n".join(launch()) + "\r\n")
        assert len(doc.ships) == 1

    @pytest.mark.parametrize("text", ["", "\n"])
    def test_empty_input(self, text):
        assert codes(text) == ["no ship sections"]

    def test_trailing_blank_line_is_named(self):
        with pytest.raises(SolutionFormatError) as error:
            parse_solution(text_of(launch()) + "\n")
        (diagnostic,) = error.value.diagnostics
        assert diagnostic.code == "trailing newline"
        assert diagnostic.line == 3
        assert "trailing newline" in str(error.value)

    def test_blank_line_inside(self):
        lines = launch() + [""] + burn_block()
        assert "blank line" in codes(text_of(lines))

    @pytest.mark.parametrize(
        "line, code",
        [
            ("1 0 64400 1 2 3", "field count"),
            ("1 -1 64400 1 2 3 4", "field count"),
            ("1 0 64400 abc 2 3 4 5 6 2000", "non-numeric token"),
            ("1 0 64400 1e999 2 3 4 5 6 2000", "non-numeric token"),
            ("one 0 64400 1 2 3 4 5 6 2000", "non-numeric token"),
            ("0 0 64400 1 2 3 4 5 6 2000", "ship id"),
            ("1 -5 64400 1 2 3 4 5 6 2000", "event id"),
            ("1 60001 64400 1 2 3 4 5 6 2000", "event id"),
        ],
    )
    def test_malformed_line(self, line, code):
        found = codes(text_of(launch() + [line]))
        assert code in found

    def test_diagnostics_carry_line_numbers_in_order(self):
        lines = ["1 0 64400 1 2 3"] + launch()[1:] + ["1 -3 64500 1 2 3"]
        with pytest.raises(SolutionFormatError) as error:
            parse_solution(text_of(lines))
        numbers = [diagnostic.line for diagnostic in error.value.diagnostics]
        assert numbers == sorted(numbers)
        assert 1 in numbers and 3 in numbers

    def test_ship_order(self):
        assert "ship order" in codes(text_of(launch(2)))
        assert "ship order" in codes(text_of(launch(1) + launch(3)))

    def test_section_must_start_with_launch(self):
        pair = [state_line(event=5), state_line(event=5, m=1960.0)]
        assert "section start" in codes(text_of(pair))

    def test_duplicate_launch(self):
        assert "duplicate launch" in codes(text_of(launch() + launch(1, T0 + 1.0)))

    def test_unpaired_event(self):
        assert "unpaired event" in codes(text_of(launch() + [state_line(event=-2, t=T0 + 100.0)]))

    def test_pair_with_different_epochs(self):
        lines = launch() + [state_line(event=-2, t=T0 + 100.0), state_line(event=-2, t=T0 + 101.0)]
        assert "unpaired event" in codes(text_of(lines))

    def test_epoch_order(self):
        lines = launch() + [state_line(event=-4, t=T0 - 10.0)] * 2
        assert "epoch order" in codes(text_of(lines))

    def test_burn_must_open_with_zero_line(self):
        lines = launch() + burn_block()
        lines[2] = f"1 -1 {T0 + 10.0} 0.1 0 0"
        assert "burn boundary" in codes(text_of(lines))

    def test_burn_without_closing_line(self):
        lines = launch() + burn_block()[:-1]
        assert "burn boundary" in codes(text_of(lines))

    def test_burn_needs_two_samples(self):
        lines = launch() + burn_block(epochs=(0.0,))
        assert "burn arc" in codes(text_of(lines))

    def test_burn_spacing(self):
        lines = launch() + burn_block(epochs=(0.0, 2.0, 3.0))
        assert "burn spacing" in codes(text_of(lines))

    def test_short_last_burn_step_accepted(self):
        doc = parse_solution(text_of(launch() + burn_block(epochs=(0.0, 1.0, 1.25))))
        assert doc.ships[0].events[1].end == T0 + 11.25

    @given(text=st.text(alphabet=st.sampled_from(list("0123456789 -+.eE\n\rx\t")), max_size=400))
    @settings(max_examples=300, deadline=None)
    def test_never_raises_anything_else(self, text):
        try:
            parse_solution(text)
        except SolutionFormatError as error:
            assert error.diagnostics
            assert all(diagnostic.line >= 1 for diagnostic in error.diagnostics)


class TestSerializeSolution:
    def test_one_launch_is_two_lines(self):
        text = serialize_solution(parse_solution(text_of(launch())))
        assert text.count("\n") == 2
        assert text.endswith("\n") and not text.endswith("\n\n")
        assert all("  " not in line for line in text.splitlines())

    def test_round_trip_and_byte_stability(self):
        lines = launch() + burn_block(epochs=(0.0, 1.0, 2.0, 3.0)) + launch(2, T0 + 3.0)
        doc = parse_solution(text_of(lines))
        text = serialize_solution(doc)
        again = parse_solution(text)
        assert again == doc
        assert serialize_solution(again) == text

    def test_burn_samples_preserved(self):
        doc = parse_solution(text_of(launch() + burn_block(epochs=(0.0, 1.0, 2.0, 3.0, 4.0))))
        text = serialize_solution(doc)
        burn_lines = [line for line in text.splitlines() if line.split()[1] == "-1"]
        assert len(burn_lines) == 5 + 2
        assert burn_lines[0].split()[3:] == ["0.000000000000000e+00"] * 3

    @given(value=st.floats(allow_nan=False, allow_infinity=False))
    @settings(max_examples=300, deadline=None)
    def test_format_real_is_exact(self, value):
        text = format_real(value)
        assert float(text) == value
        assert "e" in text


class TestLintSolution:
    def test_canonical_output_is_clean(self):
        lines = launch() + burn_block(epochs=(0.0, 1.0, 2.0))
        assert lint_solution(serialize_solution(parse_solution(text_of(lines)))) == []

    def test_low_precision(self):
        line = "1 0 64400 1.49598e8 2.0e7 1.0e5 -4.0 29.5 0.1 2000.0"
        warnings = lint_solution(line + "\n")
        assert [warning.code for warning in warnings] == ["precision"]

    def test_epoch_outside_window(self):
        text = serialize_solution(parse_solution(text_of(launch(t=64000.0))))
        assert {warning.code for warning in lint_solution(text)} == {"window"}

    def test_spacing_and_line_endings(self):
        canonical = serialize_solution(parse_solution(text_of(launch())))
        first, second = canonical.splitlines()
        text = first.replace(" ", "\t", 1) + "\r\n" + second.replace(" ", "  ", 1) + "\n"
        found = [(warning.line, warning.code) for warning in lint_solution(text)]
        assert (1, "line ending") in found
        assert (1, "spacing") in found
        assert (2, "spacing") in found

    def test_garbage_never_raises(self):
        assert lint_solution("not a solution\n\x00\x01 x y\n") == []

    @pytest.mark.parametrize(
        "token, digits", [("1.234500e+03", 7), ("-0.00120", 3), ("42", 2), ("1.000000000000000e+00", 16)]
    )
    def test_significant_digits(self, token, digits):
        assert significant_digits(token) == digits
