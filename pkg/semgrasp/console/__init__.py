""" Terminal output of the `semgrasp` commands: tables, panels and messages. """

import os as _os
import shutil as _shutil
import sys as _sys

__all__ = ["Console", "COLORS"]

COLORS = {
    "red": "\033[31m",
    "green": "\033[32m",
    "yellow": "\033[33m",
    "cyan": "\033[36m",
    "bold": "\033[1m",
}
""" ANSI escape sequences understood by `Console.out(style=...)`. """

RESET = "\033[0m"

DEFAULT_WIDTH = 100


class Console:
    """ Writes text and renderables to a stream, coloring only real terminals.

    Examples:
        ```pycon
        >>> import io
        >>> buffer = io.StringIO()
        >>> Console(file=buffer).out("MAP", 0.95)
        >>> buffer.getvalue()
        'MAP 0.95\\n'
        ```
    """
    def __init__(self, file=None, force_terminal=None, width=None):
        """ Create a console.

        Args:
            file (typing.TextIO, optional): Destination stream. `None` means
                whatever `sys.stdout` is at write time.
            force_terminal (bool, optional): Override terminal detection.
            width (int, optional): Fixed width in columns; detected when omitted.
        """
        self._file = file
        self._force_terminal = force_terminal
        self._width = int(width) if width is not None and str(width).isdigit() else None

    @property
    def file(self):
        return _sys.stdout if self._file is None else self._file

    @property
    def width(self):
        # type: () -> int
        """ Columns available for tables and panels. """
        if self._width is not None:
            return self._width
        if self.is_terminal():
            return _shutil.get_terminal_size((DEFAULT_WIDTH, 24)).columns
        return DEFAULT_WIDTH

    def is_terminal(self):
        # type: () -> bool
        """ Whether the stream understands escape codes.

        `force_terminal` wins, then a set `FORCE_COLOR` variable, then the
        stream's own `isatty()`.
        """
        if self._force_terminal is not None:
            return self._force_terminal
        if _os.environ.get("FORCE_COLOR") is not None:
            return True

        isatty = getattr(self.file, "isatty", None)
        if isatty is None:
            return False
        try:
            return isatty()
        except ValueError:
            # closed stream
            return False

    def is_dumb_terminal(self):
        # type: () -> bool
        """ A terminal whose `TERM` is `dumb` or `unknown`. """
        return self.is_terminal() and _os.environ.get("TERM", "").lower() in ("dumb", "unknown")

    def use_colors(self):
        # type: () -> bool
        """ Colors are emitted only on real terminals and never when
        the `NO_COLOR` variable (https://no-color.org/) is set. """
        if _os.environ.get("NO_COLOR", "") != "":
            return False
        return self.is_terminal() and not self.is_dumb_terminal()

    def out(self, *args, **kwargs):
        """ Write `args` as plain text, like `print()`.

        Args:
            *args: Values joined with `sep`.
            sep (str, optional): Defaults to `" "`.
            end (str, optional): Defaults to `"\\n"`.
            style (str, optional): One of the keys of `COLORS`.

        Raises:
            ValueError: On an unknown style.
        """
        sep = kwargs.get("sep", " ")
        end = kwargs.get("end", "\n")
        style = kwargs.get("style")
        if style is not None and style not in COLORS:
            raise ValueError("Invalid style '%s' (expected one of %s)." % (style, ", ".join(sorted(COLORS))))

        text = sep.join(str(_arg) for _arg in args)
        if style is not None and self.use_colors():
            text = COLORS[style] + text + RESET

        self.file.write(text + end)
        self.file.flush()

    def print(self, *args, **kwargs):
        """ Like `out()`, but objects with a `__console_print__(console)`
        method (tables, panels) are rendered for this console first. """
        rendered = [
            str(_arg.__console_print__(self)) if callable(getattr(_arg, "__console_print__", None)) else _arg
            for _arg in args
        ]
        self.out(*rendered, **kwargs)
