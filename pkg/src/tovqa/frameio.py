"""Raw planar video ingestion: Y4M and headerless YUV420p.

Decoding of compressed formats is delegated to an external encoder/decoder
(see tovqa.dataset); this module only handles bit-exact raw planes so metric
computation never depends on container metadata.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import BinaryIO, Iterable, List, Union

import numpy as np

_ACCEPTED_C420 = {"420", "420jpeg", "420mpeg2", "420paldv"}


class VideoFormatError(ValueError):
    """Malformed or unsupported raw-video input."""


@dataclass(frozen=True)
class Frame:
    """One 8-bit YUV 4:2:0 frame: full-size luma, half-size chroma planes."""

    y: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        h, w = self.y.shape
        expect = (h // 2, w // 2)
        if self.u.shape != expect or self.v.shape != expect:
            raise VideoFormatError(
                f"chroma plane shape {self.u.shape}/{self.v.shape} does not match "
                f"luma {self.y.shape}"
            )
        for p in (self.y, self.u, self.v):
            if p.dtype != np.uint8:
                raise VideoFormatError("planes must be uint8")


@dataclass(frozen=True)
class VideoClip:
    width: int
    height: int
    frame_rate: Fraction
    frames: List[Frame] = field(default_factory=list)
    bit_depth: int = 8

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise VideoFormatError(f"bad dimensions {self.width}x{self.height}")
        if self.width % 2 or self.height % 2:
            raise VideoFormatError(
                f"4:2:0 requires even dimensions, got {self.width}x{self.height}"
            )
        if self.bit_depth != 8:
            raise VideoFormatError("only 8-bit clips are supported")
        if not self.frames:
            raise VideoFormatError("clip has no frames")
        for f in self.frames:
            if f.y.shape != (self.height, self.width):
                raise VideoFormatError(
                    f"frame plane {f.y.shape} does not match clip "
                    f"{self.height}x{self.width}"
                )

    def __len__(self):
        return len(self.frames)


def luma(frame: Frame) -> np.ndarray:
    """The Y plane, unmodified. All metrics operate on this."""
    return frame.y


def _frame_size(width: int, height: int) -> int:
    return width * height * 3 // 2


def _split_frame(buf: bytes, width: int, height: int) -> Frame:
    ysz = width * height
    csz = ysz // 4
    y = np.frombuffer(buf, dtype=np.uint8, count=ysz).reshape(height, width)
    u = np.frombuffer(buf, dtype=np.uint8, count=csz, offset=ysz).reshape(
        height // 2, width // 2
    )
    v = np.frombuffer(buf, dtype=np.uint8, count=csz, offset=ysz + csz).reshape(
        height // 2, width // 2
    )
    return Frame(y=y, u=u, v=v)


def _as_stream(source: Union[bytes, BinaryIO]) -> BinaryIO:
    if isinstance(source, (bytes, bytearray)):
        import io

        return io.BytesIO(source)
    return source


def read_y4m(source: Union[bytes, BinaryIO]) -> VideoClip:
    """Parse a YUV4MPEG2 stream. Only 4:2:0 chroma sampling is accepted."""
    stream = _as_stream(source)
    header = bytearray()
    while True:
        c = stream.read(1)
        if not c:
            raise VideoFormatError("truncated Y4M header")
        if c == b"\n":
            break
        header.extend(c)
    tokens = header.decode("ascii", errors="replace").split(" ")
    if tokens[0] != "YUV4MPEG2":
        raise VideoFormatError("missing YUV4MPEG2 signature")

    width = height = None
    rate = None
    colorspace = "420"
    for tok in tokens[1:]:
        if not tok:
            continue
        tag, val = tok[0], tok[1:]
        if tag == "W":
            width = int(val)
        elif tag == "H":
            height = int(val)
        elif tag == "F":
            num, den = val.split(":")
            rate = Fraction(int(num), int(den))
        elif tag == "C":
            colorspace = val
        elif tag == "I":
            if val not in ("p", "?"):
                raise VideoFormatError(f"interlaced content not supported (I{val})")
        # A (aspect) and X (extensions) tokens are ignored
    if width is None or height is None or rate is None:
        raise VideoFormatError("Y4M header must declare W, H and F")
    if colorspace not in _ACCEPTED_C420:
        raise VideoFormatError(f"unsupported colorspace C{colorspace}")

    fsz = _frame_size(width, height)
    frames: List[Frame] = []
    while True:
        line = bytearray()
        c = stream.read(1)
        if not c:
            break
        while c != b"\n":
            line.extend(c)
            c = stream.read(1)
            if not c:
                raise VideoFormatError("truncated FRAME marker")
        if not bytes(line).startswith(b"FRAME"):
            raise VideoFormatError(f"expected FRAME marker, got {bytes(line)!r}")
        payload = stream.read(fsz)
        if len(payload) != fsz:
            raise VideoFormatError(
                f"truncated frame payload: expected {fsz} bytes, got {len(payload)}"
            )
        frames.append(_split_frame(payload, width, height))
    return VideoClip(width=width, height=height, frame_rate=rate, frames=frames)


def read_raw_yuv(
    source: Union[bytes, BinaryIO],
    width: int,
    height: int,
    frame_rate: Union[Fraction, int],
) -> VideoClip:
    """Parse headerless YUV420p: planar Y, U, V per frame, no padding."""
    if width % 2 or height % 2:
        raise VideoFormatError(
            f"4:2:0 requires even dimensions, got {width}x{height}"
        )
    data = _as_stream(source).read()
    fsz = _frame_size(width, height)
    if len(data) == 0:
        raise VideoFormatError("empty stream: clip must have at least one frame")
    if len(data) % fsz:
        raise VideoFormatError(
            f"stream length {len(data)} is not a multiple of frame size {fsz}"
        )
    frames = [
        _split_frame(data[i * fsz : (i + 1) * fsz], width, height)
        for i in range(len(data) // fsz)
    ]
    return VideoClip(
        width=width,
        height=height,
        frame_rate=Fraction(frame_rate),
        frames=frames,
    )


def write_raw_yuv(clip: VideoClip) -> bytes:
    """Serialize to headerless YUV420p. Round-trips bit-exactly."""
    parts: List[bytes] = []
    for f in clip.frames:
        parts.append(f.y.tobytes())
        parts.append(f.u.tobytes())
        parts.append(f.v.tobytes())
    return b"".join(parts)


def write_y4m(clip: VideoClip) -> bytes:
    """Serialize to a YUV4MPEG2 stream (C420, progressive)."""
    rate = clip.frame_rate
    head = f"YUV4MPEG2 W{clip.width} H{clip.height} F{rate.numerator}:{rate.denominator} Ip C420\n"
    parts = [head.encode("ascii")]
    for f in clip.frames:
        parts.append(b"FRAME\n")
        parts.append(f.y.tobytes())
        parts.append(f.u.tobytes())
        parts.append(f.v.tobytes())
    return b"".join(parts)


def clip_from_luma(
    planes: Iterable[np.ndarray], frame_rate: Union[Fraction, int] = 10
) -> VideoClip:
    """Build a clip from luma planes with neutral (128) chroma. Test/tooling aid."""
    frames = []
    for p in planes:
        p = np.asarray(p, dtype=np.uint8)
        h, w = p.shape
        c = np.full((h // 2, w // 2), 128, dtype=np.uint8)
        frames.append(Frame(y=p, u=c, v=c.copy()))
    if not frames:
        raise VideoFormatError("clip has no frames")
    h, w = frames[0].y.shape
    return VideoClip(width=w, height=h, frame_rate=Fraction(frame_rate), frames=frames)
