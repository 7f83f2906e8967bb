# -*- coding: utf-8 -*-
"""
On-disk formats: field files, run manifests, iteration logs and sweep
tables.

A field file starts with the line ``MATMI-FIELD 1``, followed by one line
of JSON header and the payload as little-endian float64 in row-major order.
"""

import json
import logging
import os

from datetime import datetime

import numpy as np
import xarray as xr

from matmi import __version__
from matmi.exceptions import FieldFileError, InputError, MeshMismatchError
from matmi.fields import (BROKEN, ELEMENT, NODAL, ScalarField, TensorField,
                          VectorField)
from matmi.mesh import mesh_from_descriptor

logger = logging.getLogger(__name__)

MAGIC = b"MATMI-FIELD"
FORMAT_VERSION = 1

SCALAR = "scalar"
VECTOR = "vector"
TENSOR = "tensor"

LOG_COLUMNS = ("iteration", "error", "residual", "ratio", "wall_time")


########################################################################
############################ Field files ###############################

def _describe(field):
    if isinstance(field, ScalarField):
        return SCALAR, NODAL
    if isinstance(field, VectorField):
        return VECTOR, field.representation
    if isinstance(field, TensorField):
        return TENSOR, NODAL
    raise TypeError(f"Cannot store objects of type {type(field).__name__}")


def write_field(path, field, name=None, csv=False):
    """Write a field file, optionally with a CSV twin next to it

    Parameters
    ----------
    path : :obj:`str`
    field : :obj:`ScalarField`, :obj:`VectorField` or :obj:`TensorField`
    name : :obj:`str`, optional
        Stored in the header
    csv : :obj:`bool`
        Also write ``<path without extension>.csv``
    """
    kind, representation = _describe(field)
    values = np.ascontiguousarray(field.values, dtype="<f8")
    header = {"format_version": FORMAT_VERSION,
              "mesh": field.mesh.descriptor,
              "field_kind": kind,
              "representation": representation,
              "shape": list(values.shape),
              "name": name or ""}

    with open(path, "wb") as f:
        f.write(MAGIC + b" %d\n" % FORMAT_VERSION)
        f.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        f.write(values.tobytes(order="C"))

    logger.debug(f"Wrote {kind} field to {path}")

    if csv:
        write_field_csv(os.path.splitext(path)[0] + ".csv", field)


def read_field(path, mesh=None):
    """Read a field file

    Parameters
    ----------
    path : :obj:`str`
    mesh : :obj:`matmi.mesh.Mesh`, optional
        Mesh to attach the field to. It must match the stored descriptor.
        The mesh is rebuilt from the descriptor if not given.

    Returns
    -------
    field : :obj:`ScalarField`, :obj:`VectorField` or :obj:`TensorField`

    Raises
    ------
    FieldFileError
        For any malformed content
    MeshMismatchError
        If :attr:`mesh` does not match the stored descriptor
    """
    try:
        with open(path, "rb") as f:
            magic = f.readline()
            raw_header = f.readline()
            payload = f.read()
    except OSError as err:
        raise FieldFileError(path, f"cannot read file ({err})")

    parts = magic.split()
    if len(parts) != 2 or parts[0] != MAGIC:
        raise FieldFileError(path, "not a matmi field file")
    if parts[1] != b"%d" % FORMAT_VERSION:
        raise FieldFileError(path, f"unsupported format version "
                             f"{parts[1].decode(errors='replace')}")

    try:
        header = json.loads(raw_header)
        kind = header["field_kind"]
        representation = header["representation"]
        shape = tuple(int(_) for _ in header["shape"])
        descriptor = header["mesh"]
    except (ValueError, KeyError, TypeError) as err:
        raise FieldFileError(path, f"corrupted header ({err})")

    count = int(np.prod(shape))
    if len(payload) != 8 * count:
        raise FieldFileError(path, f"payload holds {len(payload)} bytes, "
                             f"header declares {count} values")
    values = np.frombuffer(payload, dtype="<f8").reshape(shape)

    if mesh is None:
        try:
            mesh = mesh_from_descriptor(descriptor)
        except (ValueError, KeyError) as err:
            raise FieldFileError(path, f"bad mesh descriptor ({err})")
    elif mesh.descriptor != descriptor:
        raise MeshMismatchError(f"{path}: stored mesh {descriptor} differs "
                                f"from {mesh.descriptor}")

    try:
        if kind == SCALAR:
            return ScalarField(mesh, values)
        if kind == VECTOR:
            return VectorField(mesh, values, representation)
        if kind == TENSOR:
            return TensorField(mesh, *values.T)
    except ValueError as err:
        raise FieldFileError(path, str(err))
    raise FieldFileError(path, f"unknown field kind '{kind}'")


def write_field_csv(path, field):
    """Plain text twin of a field: coordinates followed by values"""
    kind, representation = _describe(field)
    mesh = field.mesh

    if kind == SCALAR:
        table = np.column_stack((mesh.vertices, field.values))
        names = ["x1", "x2", "value"]
    elif kind == TENSOR:
        table = np.column_stack((mesh.vertices, field.values))
        names = ["x1", "x2", "d11", "d12", "d22"]
    elif representation == NODAL:
        table = np.column_stack((mesh.vertices, field.values))
        names = ["x1", "x2", "v1", "v2"]
    elif representation == ELEMENT:
        table = np.column_stack((mesh.centroids, field.values))
        names = ["x1", "x2", "v1", "v2"]
    else:
        points = mesh.vertices[mesh.triangles].reshape(-1, 2)
        table = np.column_stack((points, field.values.reshape(-1, 2)))
        names = ["x1", "x2", "v1", "v2"]

    np.savetxt(path, table, fmt="%.17g", delimiter=",",
               header=",".join(names), comments="")
    logger.debug(f"Wrote CSV twin {path}")


########################################################################
############################## Manifest ################################

def build_manifest(**entries):
    """Manifest dictionary with the software version and a timestamp"""
    manifest = {"software": "matmi", "version": __version__,
                "created": datetime.now().isoformat(timespec="seconds")}
    manifest.update(entries)
    return manifest


def write_manifest(path, manifest):
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True, default=_jsonable)
        f.write("\n")
    logger.debug(f"Wrote manifest {path}")


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Cannot serialise {type(value).__name__}")


def read_manifest(path):
    try:
        with open(path) as f:
            manifest = json.load(f)
    except OSError as err:
        raise FieldFileError(path, f"cannot read manifest ({err})")
    except ValueError as err:
        raise FieldFileError(path, f"corrupted manifest ({err})")
    if not isinstance(manifest, dict):
        raise FieldFileError(path, "manifest is not a JSON object")
    return manifest


########################################################################
######################## Logs and tables ###############################

def write_table(path, ds):
    """Write a one dimensional :obj:`xarray.Dataset` as CSV"""
    ds.to_dataframe().to_csv(path, float_format="%.17g")
    logger.debug(f"Wrote table {path}")


def write_log(path, log):
    """Write an :obj:`matmi.reconstruct.IterationLog` as CSV"""
    write_table(path, log.to_dataset())


def read_table(path):
    """Read a CSV table written by :func:`write_table`

    Returns
    -------
    ds : :obj:`xarray.Dataset`
        Indexed by the first column

    Raises
    ------
    InputError
        If the table has no rows
    FieldFileError
        If it cannot be parsed
    """
    try:
        data = np.genfromtxt(path, delimiter=",", names=True, dtype=None,
                             encoding="utf-8")
    except OSError as err:
        raise FieldFileError(path, f"cannot read table ({err})")
    except (ValueError, IndexError) as err:
        raise FieldFileError(path, f"malformed table ({err})")

    if data.dtype.names is None:
        raise FieldFileError(path, "table has no header")
    data = np.atleast_1d(data)
    if data.size == 0:
        raise InputError(f"{path}: table is empty")

    index, *columns = data.dtype.names
    return xr.Dataset({name: (index, data[name]) for name in columns},
                      coords={index: data[index]})


def read_log(path):
    """Read an iteration log CSV

    Returns
    -------
    log : :obj:`matmi.reconstruct.IterationLog`
    """
    from matmi.reconstruct import IterationLog

    ds = read_table(path)
    missing = [c for c in LOG_COLUMNS if c not in ds.variables]
    if missing:
        raise FieldFileError(path, f"missing log columns: "
                             f"{', '.join(missing)}")
    try:
        ds = ds.astype(float)
        ds = ds.assign_coords(iteration=ds["iteration"].astype(int))
        return IterationLog.from_dataset(ds)
    except ValueError as err:
        raise FieldFileError(path, f"malformed log ({err})")
