from semgrasp.components._renderables import Renderable
from semgrasp.console import COLORS, RESET


class Panel(Renderable):
    """A panel is a bordered container for a block of text, with an optional title.

    Used by the applications to display errors and notices.
    """
    def __init__(
        self,
        renderable,
        title=None,
        border_style=None,
        width=None, # type: int|None
    ):
        if border_style is not None and border_style not in COLORS:
            raise ValueError("Invalid border style: %s" % border_style)

        self.renderable = str(renderable)
        self.title = title
        self.border_style = border_style

        self.width = None
        if width is not None and str(width).isdigit():
            self.width = int(width)

    def __console_print__(self, console):
        """Render the panel to a console."""
        console_width = self.width
        if console_width is None:
            console_width = console.width
        inner_width = max(int(console_width) - 4, 1)

        begin, end = "", ""
        if self.border_style is not None and console.use_colors():
            begin, end = COLORS[self.border_style], RESET

        header_content = "-" * (inner_width + 2)
        if self.title is not None:
            title = " %s " % self.title
            left = max((inner_width + 2 - len(title)) // 2, 0)
            header_content = ("-" * left + title).ljust(inner_width + 2, "-")

        output = ["%s+%s+%s" % (begin, header_content, end)]
        for _line in self.renderable.splitlines() or [""]:
            # Long lines are wrapped, never truncated
            for _start in range(0, max(len(_line), 1), inner_width):
                output.append("%s|%s %s %s|%s" % (
                    begin, end,
                    _line[_start:_start + inner_width].ljust(inner_width),
                    begin, end,
                ))
        output.append("%s+%s+%s" % (begin, "-" * (inner_width + 2), end))

        return "\n".join(output)

    def __repr__(self):
        return "<%s width=%s>" % (self.__class__.__name__, self.width)
