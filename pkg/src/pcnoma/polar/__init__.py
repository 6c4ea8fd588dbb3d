"""Binary polar codec: transform, CRC, GA construction and decoders."""

from .codec import PolarCodeSpec, encode, extract_message, polar_transform
from .construction import ConstructionInfeasible, ga_construct, select_info_sets
from .crc import CRC_LEN, crc_attach, crc_check
from .decoding import LLR_CLIP, ca_scl_decode, sc_decode

__all__ = [
    "CRC_LEN", "LLR_CLIP", "ConstructionInfeasible", "PolarCodeSpec", "ca_scl_decode",
    "crc_attach", "crc_check", "encode", "extract_message", "ga_construct",
    "polar_transform", "sc_decode", "select_info_sets",
]
