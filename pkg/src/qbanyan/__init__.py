"""Amplitude-level simulation of a block-free optical quantum Banyan switch."""

from .banyan import (
    BanyanTopology,
    Packet,
    RouteResult,
    RouteStatus,
    build_topology,
    enumerate_blocking,
    monte_carlo,
    route,
    route_bit,
)
from .components import DetectorModel, HwpSetting, hwp_matrix
from .estimator import BanyanRouter
from .fock import FockConfig, Mode, PhotonicState, Polarization, QubitSpec
from .gates import FeedForward, FusedState, HeraldOutcome, fission, fredkin, fuse
from .switch_unit import PortContent, SwitchControls, oqsu

__all__ = [
    "BanyanRouter",
    "BanyanTopology",
    "DetectorModel",
    "FeedForward",
    "FockConfig",
    "FusedState",
    "HeraldOutcome",
    "HwpSetting",
    "Mode",
    "Packet",
    "PhotonicState",
    "Polarization",
    "PortContent",
    "QubitSpec",
    "RouteResult",
    "RouteStatus",
    "SwitchControls",
    "build_topology",
    "enumerate_blocking",
    "fission",
    "fredkin",
    "fuse",
    "hwp_matrix",
    "monte_carlo",
    "oqsu",
    "route",
    "route_bit",
]
