"""Shared builders for the test suite."""

import numpy as np

from hvacrl.comfort import ComfortModel
from hvacrl.envsim import SyntheticWeather
from hvacrl.nets import DenseNet


def constant_comfort_model(value=0.0):
    """A comfort net that ignores its inputs and reports a fixed vote."""
    net = DenseNet(
        [6, 2, 2, 1],
        [np.zeros((2, 6)), np.zeros((2, 2)), np.zeros((1, 2))],
        [np.zeros(2), np.zeros(2), np.array([float(value)])],
        ["sigmoid", "sigmoid", "linear"],
    )
    return ComfortModel(net)


def constant_weather(temp=30.0, rh=80.0):
    return SyntheticWeather(
        temp_mean=temp, temp_amplitude=0.0, rh_mean=rh, rh_amplitude=0.0
    )
