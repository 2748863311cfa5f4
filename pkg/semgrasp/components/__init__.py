""" Renderable components printed through `semgrasp.console.Console`. """
