""" Package containing the modules of a context-aware semantic grasp
ranking engine: dataset handling, grasp semantics, the Wide & Deep
network, baselines and the evaluation harness. """

__version__ = "1.0.0"
