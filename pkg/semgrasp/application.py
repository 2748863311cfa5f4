""" Base class of the `semgrasp` sub-commands (`gen`, `train`, `eval`,
`rank`, `report`).

Usage:
    >>> class Summary(Application):
    ...     title = "demo"
    ...
    ...     def main(self):
    ...         path = self.register_output("summary.csv")
    ...         with open(path, "w") as _file:
    ...             _file.write("Method,MAP")
    ...         return True
    ...
    >>> status = Summary().run(exit=False)
    ------------------------------------ demo ------------------------------------
    ------------------------------------ demo ------------------------------------

When `main()` raises or returns a falsy boolean/integer, every file that was
registered with `register_output()` is removed and the exit status is 1.
"""
import logging as _logging
import os as _os
import sys as _sys
import time as _time
import traceback

from semgrasp.console import Console
from semgrasp.components.panel import Panel

__all__ = ["Application", "ApplicationContext"]

logger = _logging.getLogger(__name__)


def is_boolean(value):
    """ Whether `value` can be read as a success flag (a `bool` or an `int`). """
    return isinstance(value, (bool, int))


class Application:
    """ One sub-command run: `main()` does the work, the hooks
    `on_success()`, `on_failure()` and `on_finish()` run afterwards.
    """

    title = None # type: str|None
    """ Printed in the divider; defaults to the class name. """

    console = None # type: Console|None
    """ Destination of every table, panel and message. """

    divider = "%(title)s" # type: str|None
    """ String printed before and after the application execution
    (`%(title)s` is replaced by the title, then centered with dashes).
    Set to `None` to disable. """

    return_value = None # type: int|bool|None
    """ What `main()` returned (`None` until it has run). """

    def __init__(self, console=None, title=None):
        """ Create a new `Application` instance.

        Args:
            console (Console, optional): Console used for all output.
            title (str, optional): Overrides the class title.
        """
        if console is not None and not isinstance(console, Console):
            raise TypeError("The 'console' argument MUST be an instance of 'Console' (got '%s' with type '%s')." % (console, type(console)))

        self.console = console or self.console or Console()

        if title is not None:
            self.title = title
        elif self.title is None:
            self.title = self.__class__.__name__

        self.outputs = [] # type: list[str]
        self.error = None # type: BaseException|None

    def main(self):
        # type: () -> bool|int|None
        """ The body of the sub-command.

        Returns:
            success (bool|int|None): A falsy `bool` or `int` marks the run as failed.
        """
        raise NotImplementedError("'%s' does not implement main()." % self.__class__.__name__)

    def register_output(self, path):
        # type: (str) -> str
        """ Declare a file that `main()` is going to write.

        Registered files are deleted if the application fails, so that
        no partial artifact is left behind.

        Returns:
            str: The same path, for chaining.
        """
        self.outputs.append(str(path))
        return str(path)

    def on_finish(self, context):
        # type: (ApplicationContext) -> None
        """ Runs last, whatever the outcome. """

    def on_success(self, context):
        # type: (ApplicationContext) -> None
        """ Runs after a successful `main()`. """

    def on_failure(self, context):
        # type: (ApplicationContext) -> None
        """ Runs after `main()` raised or returned a falsy flag; removes
        every registered output that exists. """
        for path in context.outputs:
            if _os.path.isfile(path):
                logger.info("Removing partial output '%s'", path)
                _os.remove(path)

    def _run_hook(self, hook, context):
        """ Call `hook(context)`; a failing hook is reported, not raised. """
        try:
            return hook(context)
        except Exception:
            self.console.print("HookWarning: Error while executing the '%s' hook: %s" % (hook.__name__, _sys.exc_info()[1]), style="yellow")
            traceback.print_exc()

        return None

    def has_failed(self):
        """ `True` if `main()` raised or returned a falsy `bool`/`int`. """
        if self.error is not None:
            return True

        # `None` and non-boolean values count as success
        if self.return_value is None or not is_boolean(self.return_value):
            return False

        return not self.return_value

    def _print_divider(self):
        if self.divider is None:
            return
        text = " %s " % (self.divider % {"title": self.title})
        self.console.print(text.center(min(self.console.width, 80), "-"), style="cyan")

    def run(self, exit=True):
        # type: (bool) -> int
        """ Run `main()` between two dividers, then the hooks.

        Args:
            exit (bool): Call `sys.exit()` with the resulting status on failure.

        Returns:
            int: The exit status, `0` on success and `1` on failure.
        """
        start_time = _time.time()

        self._print_divider()
        try:
            self.return_value = self.main()
        except (SystemExit, KeyboardInterrupt):
            raise
        except Exception as error:
            self.error = error
            logger.debug("Application '%s' failed", self.title, exc_info=True)
            self.console.print(Panel(
                "".join(traceback.format_exception_only(type(error), error)).strip(),
                title="Application Error",
                border_style="red",
            ))
        self._print_divider()

        if self.error is None and self.return_value is not None and not is_boolean(self.return_value):
            self.console.print("ApplicationWarning: The return value of the 'Application.main()' method SHOULD be a boolean or an integer (got '%s' with type '%s')." % (self.return_value, type(self.return_value)))

        context = ApplicationContext(
            application=self,
            outputs=list(self.outputs),
            return_value=self.return_value,
            error=self.error,
            start_time=start_time,
            end_time=_time.time(),
        )

        failed = self.has_failed()
        if failed:
            self._run_hook(self.on_failure, context)
        else:
            self._run_hook(self.on_success, context)

        self._run_hook(self.on_finish, context)

        status = int(failed)
        if failed and exit:
            _sys.exit(status)
        return status


class ApplicationContext:
    """ Outcome of one `Application.main()` call, handed to the hooks.

    Attributes:
        application (Application): The original application instance.
        outputs (list[str]): Files registered through `Application.register_output()`.
        return_value (int|bool|None): The return value of the `Application.main()` method.
        error (BaseException|None): The exception raised by `Application.main()`, if any.
        duration (float): The duration (in seconds) of the `Application.main()` method.
    """

    def __init__(self, application, outputs, return_value, error, start_time, end_time):
        # type: (Application, list, int|bool|None, BaseException|None, float, float) -> None
        if not isinstance(outputs, list):
            raise TypeError("The 'outputs' argument MUST be a list (got '%s' with type '%s')." % (outputs, type(outputs)))

        self.application = application
        self.outputs = outputs
        self.return_value = return_value
        self.error = error

        self.start_time = start_time
        self.end_time = end_time
        self.duration = end_time - start_time

    def __str__(self):
        # type: () -> str
        return "%s(%s)" % (
            self.__class__.__name__,
            ", ".join([
                "%s=%s" % (key, value)
                for key, value in sorted(vars(self).items())
                if not key.startswith("_")
            ]),
        )
