""" Base module for all renderable elements. """
import sys as _sys


class Renderable:
    """ Base class for all renderable elements. """
    def __console_print__(self, console):
        raise NotImplementedError("The '%s' method must be defined when subclassing the 'Renderable' class." % _sys._getframe().f_code.co_name)

    def render(self, width=None):
        # type: (int|None) -> str
        """ Render the element as plain text, as if printed on a
        non-interactive console of the given width. """
        from semgrasp.console import Console
        return self.__console_print__(
            console=Console(force_terminal=False, width=width),
        )

    def __str__(self):
        return self.render()
