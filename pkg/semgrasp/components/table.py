""" Contains the Table class used for every tabular report. """
import csv as _csv
import io as _io

from semgrasp.components._renderables import Renderable

__all__ = ["Table", "format_cell"]


def format_cell(value, digits=4):
    # type: (object, int) -> str
    """ Format a single cell value.

    Floats are printed with a fixed number of decimals so that reports are
    stable across runs; everything else goes through `str()`.

    Examples:
        ```pycon
        >>> format_cell(0.84091234)
        '0.8409'
        >>> format_cell(None)
        ''
        ```
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return "%.*f" % (digits, value)
    return str(value)


def _chunks(text, size):
    # type: (str, int) -> list[str]
    """ Split every line of `text` in chunks of at most `size` characters. """
    size = max(1, size)
    lines = []
    for line in text.splitlines() or [""]:
        lines.extend([line[_start:_start + size] for _start in range(0, max(len(line), 1), size)])
    return lines


class Table(Renderable):
    """ A table that can be rendered in the console or exported as CSV. """
    def __init__(self, name, columns, digits=4):
        """ Creates a new table.

        Args:
            name (str): The name of the table. Will be displayed before printing the table.
            columns (list[str]): The column names of the table. Must match the number of columns each row contains.
            digits (int): Decimals used when formatting float cells.

        Examples:
            ```pycon
            >>> table = Table("MAP", ["Method", "MAP"])
            >>> table
            MAP (0 rows)
            ```
        """
        if not columns:
            raise ValueError("A table needs at least one column (got %r)." % (columns,))

        self.name = name
        self.columns = [str(_col) for _col in columns]
        self.digits = digits
        self.rows = []  # type: list[list[str]]

    def add_row(self, *args):
        """ Adds a row to the table.

        Args:
            *args (any): The values to add to the table.

        Raises:
            ValueError: If the number of arguments does not match the number of columns defined.
        """
        if len(args) != len(self.columns):
            raise ValueError("Invalid number of arguments (expected %d, found %d)" % (len(self.columns), len(args)))

        self.rows.append([format_cell(_val, self.digits) for _val in args])

    def column_widths(self, max_width):
        # type: (int) -> list[int]
        """ Width of each column: the content width, shrinking the widest
        columns until the table fits in `max_width` characters. """
        widths = [len(column) for column in self.columns]
        for row in self.rows:
            for index in range(len(row)):
                widths[index] = max(widths[index], max([len(_line) for _line in row[index].splitlines()] or [0]))

        # "| " + " | ".join(...) + " |"
        overhead = 3 * (len(self.columns) - 1) + 4
        while sum(widths) + overhead > max_width and max(widths) > 1:
            widths[widths.index(max(widths))] -= 1
        return widths

    def _render_row(self, cells, widths):
        # type: (list[str], list[int]) -> list[str]
        chunked = [_chunks(cells[index], widths[index]) for index in range(len(cells))]
        height = max([len(_lines) for _lines in chunked])
        for index in range(len(chunked)):
            chunked[index].extend([""] * (height - len(chunked[index])))

        return [
            "| %s |" % " | ".join([
                chunked[index][_line].ljust(widths[index])
                for index in range(len(cells))
            ])
            for _line in range(height)
        ]

    def __console_print__(self, console):
        """Render the component to a console."""
        widths = self.column_widths(console.width)
        border = "+%s+" % "+".join(["-" * (_width + 2) for _width in widths])

        table = [self.name, border]
        table.extend(self._render_row(self.columns, widths))
        table.append(border.replace("-", "="))
        for row in self.rows:
            table.extend(self._render_row(row, widths))
        table.append(border)
        return "\n".join(table)

    def to_csv(self, delimiter=",", lineterminator="\n"):
        """ Renders the table as CSV.

        Values containing the delimiter, quotes or newlines are quoted.

        Args:
            delimiter (str, optional): The delimiter to use between columns. Defaults to `","`.
            lineterminator (str, optional): The line terminator to use. Defaults to `"\\n"`.

        Returns:
            csv (str): The CSV representation of the table.

        Examples:
            ```pycon
            >>> table = Table("MAP", ["Method", "MAP"])
            >>> table.add_row("CAGE", 0.9512)
            >>> print(table.to_csv())
            Method,MAP
            CAGE,0.9512
            ```
        """
        buffer = _io.StringIO()
        writer = _csv.writer(buffer, delimiter=delimiter, lineterminator=lineterminator)
        writer.writerow(self.columns)
        writer.writerows(self.rows)
        return buffer.getvalue().rstrip(lineterminator)

    def __repr__(self):
        return "%s (%d rows)" % (self.name, len(self.rows))
