import io
import os
import unittest
from unittest import mock

from semgrasp.components.panel import Panel
from semgrasp.components.table import Table, format_cell
from semgrasp.console import COLORS, Console


class FormatCellTestCase(unittest.TestCase):
    def test_values(self):
        self.assertEqual(format_cell(0.84091234), "0.8409")
        self.assertEqual(format_cell(0.5, digits=2), "0.50")
        self.assertEqual(format_cell(None), "")
        self.assertEqual(format_cell(True), "True")
        self.assertEqual(format_cell(12), "12")
        self.assertEqual(format_cell("+inf"), "+inf")


class TableTestCase(unittest.TestCase):
    def setUp(self):
        self.table = Table("MAP", ["Method", "MAP"])
        self.table.add_row("CAGE", 0.9512)
        self.table.add_row("CA", 0.4)

    def test_repr(self):
        self.assertEqual(repr(self.table), "MAP (2 rows)")
        self.assertEqual(repr(Table("empty", ["a"])), "empty (0 rows)")

    def test_invalid(self):
        with self.assertRaises(ValueError):
            Table("x", [])
        with self.assertRaises(ValueError):
            self.table.add_row("FT")

    def test_csv(self):
        self.assertEqual(self.table.to_csv(), "Method,MAP\nCAGE,0.9512\nCA,0.4000")
        self.assertEqual(self.table.to_csv(delimiter=";"), "Method;MAP\nCAGE;0.9512\nCA;0.4000")

    def test_csv_quotes(self):
        table = Table("t", ["name"])
        table.add_row("a,b")
        self.assertEqual(table.to_csv(), 'name\n"a,b"')

    def test_render(self):
        self.assertEqual(self.table.render(), "\n".join([
            "MAP",
            "+--------+--------+",
            "| Method | MAP    |",
            "+========+========+",
            "| CAGE   | 0.9512 |",
            "| CA     | 0.4000 |",
            "+--------+--------+",
        ]))

    def test_wraps_to_width(self):
        table = Table("long", ["key", "value"])
        table.add_row("k", "x" * 30)
        lines = table.render(width=20).splitlines()
        self.assertTrue(all(len(_line) <= 20 for _line in lines[1:]))
        # Nothing is lost
        self.assertEqual("".join(_line.split("|")[2].strip() for _line in lines[4:-1]), "x" * 30)


class PanelTestCase(unittest.TestCase):
    def test_render(self):
        self.assertEqual(Panel("hello", title="Note", width=14).render(), "\n".join([
            "+--- Note ---+",
            "| hello      |",
            "+------------+",
        ]))

    def test_wraps_long_lines(self):
        lines = Panel("abcdefghij", width=8).render().splitlines()
        self.assertEqual(lines[1:-1], ["| abcd |", "| efgh |", "| ij   |"])

    def test_invalid_style(self):
        with self.assertRaises(ValueError):
            Panel("x", border_style="purple")


class ConsoleTestCase(unittest.TestCase):
    def test_out(self):
        buffer = io.StringIO()
        console = Console(file=buffer)
        console.out("a", 1, sep="-", end="!\n")
        self.assertEqual(buffer.getvalue(), "a-1!\n")
        with self.assertRaises(ValueError):
            console.out("x", style="purple")

    def test_print_renders_components(self):
        buffer = io.StringIO()
        table = Table("t", ["a"])
        table.add_row(1)
        Console(file=buffer).print(table)
        self.assertEqual(buffer.getvalue(), table.render() + "\n")

    def test_width(self):
        with mock.patch.dict(os.environ):
            os.environ.pop("FORCE_COLOR", None)
            self.assertEqual(Console(file=io.StringIO()).width, 100)
        self.assertEqual(Console(width=40).width, 40)

    def test_colors_only_on_terminals(self):
        with mock.patch.dict(os.environ, {"NO_COLOR": "", "TERM": "xterm"}):
            buffer = io.StringIO()
            Console(file=buffer, force_terminal=True).out("x", style="red")
            self.assertEqual(buffer.getvalue(), COLORS["red"] + "x\033[0m\n")

            buffer = io.StringIO()
            Console(file=buffer, force_terminal=False).out("x", style="red")
            self.assertEqual(buffer.getvalue(), "x\n")

    def test_no_color(self):
        with mock.patch.dict(os.environ, {"NO_COLOR": "1", "TERM": "xterm"}):
            buffer = io.StringIO()
            Console(file=buffer, force_terminal=True).out("x", style="red")
            self.assertEqual(buffer.getvalue(), "x\n")

    def test_dumb_terminal(self):
        with mock.patch.dict(os.environ, {"NO_COLOR": "", "TERM": "dumb"}):
            console = Console(file=io.StringIO(), force_terminal=True)
            self.assertFalse(console.use_colors())


if __name__ == "__main__":
    unittest.main()
