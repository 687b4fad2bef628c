"""Dataset resource model: metadata, typed specs, validation, manifests.

A Dataset is a pointer to exactly one remote data source — an S3-compatible
bucket (COS), an NFS share, or an HTTP archive — plus a status lifecycle the
operator drives.  Everything in this module is a plain value; parsing,
validation and fingerprinting are pure functions, safe from any thread.
"""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field, replace
from typing import ClassVar

import yaml

from .yamlutil import (
    ManifestError,
    as_mapping,
    compose_document,
    require_keys,
    scalar_value,
    string_mapping,
)

API_VERSION = "com.ie.ibm.hpsys/v1alpha1"

COS = "COS"
NFS = "NFS"
ARCHIVE = "ARCHIVE"
DATASET_TYPES = (COS, NFS, ARCHIVE)
ARCHIVE_FORMATS = ("raw", "tar", "targz")

PENDING = "Pending"
PROVISIONING = "Provisioning"
READY = "Ready"
FAILED = "Failed"
TERMINATING = "Terminating"
PHASES = (PENDING, PROVISIONING, READY, FAILED, TERMINATING)

# Ready->Provisioning covers re-provisioning after an in-place spec change;
# dependents are recreated while the Dataset object itself stays live.
_PHASE_EDGES = frozenset(
    {
        (PENDING, PROVISIONING),
        (PROVISIONING, READY),
        (PROVISIONING, FAILED),
        (FAILED, PROVISIONING),
        (READY, PROVISIONING),
    }
    | {(p, TERMINATING) for p in PHASES if p != TERMINATING}
)

# Replaces spec.secretAccessKey once the operator has copied the plaintext
# into a Secret; the prefix is reserved and may not appear in user input.
SECRET_REF_PREFIX = "secret-ref:"

_DNS_LABEL_RE = re.compile(r"^[a-z0-9]([-a-z0-9]*[a-z0-9])?$")
_BUCKET_RE = re.compile(r"^[a-z0-9][a-z0-9.-]{1,61}[a-z0-9]$")
_IPV4_RE = re.compile(r"^\d{1,3}(\.\d{1,3}){3}$")


def is_dns_label(value: str) -> bool:
    return 0 < len(value) <= 63 and _DNS_LABEL_RE.match(value) is not None


def is_bucket_name(value: str) -> bool:
    """S3 bucket-name rules: 3-63 chars of [a-z0-9.-], alphanumeric at both
    ends, no adjacent dots, not shaped like an IPv4 address.
    """
    if _BUCKET_RE.match(value) is None:
        return False
    if ".." in value:
        return False
    return _IPV4_RE.match(value) is None


def is_http_url(value: str) -> bool:
    from urllib.parse import urlsplit

    try:
        parts = urlsplit(value)
    except ValueError:
        return False
    return parts.scheme in ("http", "https") and bool(parts.netloc)


def phase_change_allowed(old: str, new: str) -> bool:
    return old == new or (old, new) in _PHASE_EDGES


@dataclass(frozen=True)
class OwnerRef:
    kind: str
    name: str
    uid: str


@dataclass
class ObjectMeta:
    name: str
    namespace: str = "default"
    uid: str = ""
    resource_version: int = 0
    labels: dict[str, str] = field(default_factory=dict)
    annotations: dict[str, str] = field(default_factory=dict)
    owner_refs: list[OwnerRef] = field(default_factory=list)
    finalizers: list[str] = field(default_factory=list)
    deletion_requested: bool = False


@dataclass(frozen=True)
class DatasetSpec:
    """Flat union of the per-type field sets; validation enforces the table."""

    dataset_type: str
    endpoint: str = ""
    bucket: str = ""
    access_key_id: str = ""
    secret_access_key: str = ""
    region: str = ""
    server: str = ""
    share: str = ""
    url: str = ""
    archive_format: str = ""


@dataclass(frozen=True)
class ProbeSummary:
    timestamp: float
    reachable: bool
    authorized: bool
    bucket_exists: bool
    detail: str = ""


@dataclass
class DatasetStatus:
    phase: str = PENDING
    message: str = ""
    bound_claim: str | None = None
    bound_secret: str | None = None
    cached: bool = False
    last_probe: ProbeSummary | None = None


@dataclass
class Dataset:
    kind: ClassVar[str] = "Dataset"
    meta: ObjectMeta
    spec: DatasetSpec
    status: DatasetStatus = field(default_factory=DatasetStatus)


@dataclass(frozen=True)
class FieldError:
    field: str
    reason: str

    def __str__(self) -> str:
        return f"{self.field}: {self.reason}"


@dataclass(frozen=True)
class ValidationResult:
    errors: tuple[FieldError, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors

    def __str__(self) -> str:
        return "ok" if self.ok else "; ".join(str(e) for e in self.errors)


# Manifest key -> DatasetSpec attribute.  "type" maps to dataset_type and is
# handled separately; all other entries are flat strings under spec.local.
_FIELD_ATTRS = {
    "endpoint": "endpoint",
    "bucket": "bucket",
    "accessKeyID": "access_key_id",
    "secretAccessKey": "secret_access_key",
    "region": "region",
    "server": "server",
    "share": "share",
    "url": "url",
    "format": "archive_format",
}

FIELD_TABLE: dict[str, dict[str, tuple[str, ...]]] = {
    COS: {
        "required": ("endpoint", "bucket", "accessKeyID", "secretAccessKey"),
        "optional": ("region",),
    },
    NFS: {"required": ("server", "share"), "optional": ()},
    ARCHIVE: {"required": ("url", "format"), "optional": ()},
}


def _check_url(value: str) -> str | None:
    if not is_http_url(value):
        return "must be an absolute http(s) URL"
    return None


def _check_bucket(value: str) -> str | None:
    if not is_bucket_name(value):
        return "must match S3 bucket grammar"
    return None


def _check_share(value: str) -> str | None:
    if not value.startswith("/"):
        return "must be an absolute path"
    return None


def _check_server(value: str) -> str | None:
    if any(c.isspace() for c in value):
        return "must not contain whitespace"
    return None


def _check_format(value: str) -> str | None:
    if value not in ARCHIVE_FORMATS:
        return f"must be one of {', '.join(ARCHIVE_FORMATS)}"
    return None


_FIELD_CHECKS = {
    "endpoint": _check_url,
    "url": _check_url,
    "bucket": _check_bucket,
    "share": _check_share,
    "server": _check_server,
    "format": _check_format,
}


def validate_dataset(spec: DatasetSpec) -> ValidationResult:
    """Check the spec against the per-type field table.

    Violations are collected, not raised; each carries the manifest-level
    field path (spec.<key>) and a reason.
    """
    if spec.dataset_type not in FIELD_TABLE:
        return ValidationResult(
            (FieldError("spec.type", f"unknown datasetType {spec.dataset_type!r}"),)
        )
    table = FIELD_TABLE[spec.dataset_type]
    applicable = set(table["required"]) | set(table["optional"])
    errors: list[FieldError] = []
    for key in table["required"]:
        if not getattr(spec, _FIELD_ATTRS[key]):
            errors.append(FieldError(f"spec.{key}", "required"))
    for key, attr in _FIELD_ATTRS.items():
        value = getattr(spec, attr)
        if not value:
            continue
        if key not in applicable:
            errors.append(
                FieldError(f"spec.{key}", f"not applicable to datasetType {spec.dataset_type}")
            )
            continue
        check = _FIELD_CHECKS.get(key)
        reason = check(value) if check else None
        if reason:
            errors.append(FieldError(f"spec.{key}", reason))
    return ValidationResult(tuple(errors))


def spec_to_local_fields(spec: DatasetSpec) -> dict[str, str]:
    """The spec.local mapping: type plus every non-empty field, manifest spelling."""
    fields = {"type": spec.dataset_type}
    for key, attr in _FIELD_ATTRS.items():
        value = getattr(spec, attr)
        if value:
            fields[key] = value
    return fields


def spec_from_local_fields(fields: dict[str, str]) -> DatasetSpec:
    kwargs = {"dataset_type": fields.get("type", "")}
    for key, attr in _FIELD_ATTRS.items():
        if key in fields:
            kwargs[attr] = fields[key]
    return DatasetSpec(**kwargs)


def spec_fingerprint(spec: DatasetSpec) -> int:
    """64-bit digest of the canonical spec encoding.

    Canonical form: compact JSON of the spec.local mapping with sorted keys.
    Credential fields participate, so a rotated key changes the digest.
    """
    canon = json.dumps(spec_to_local_fields(spec), sort_keys=True, separators=(",", ":"))
    return int.from_bytes(hashlib.sha256(canon.encode("utf-8")).digest()[:8], "big")


def spec_fingerprint_hex(spec: DatasetSpec) -> str:
    return f"{spec_fingerprint(spec):016x}"


def scrubbed_spec(spec: DatasetSpec, namespace: str, secret_name: str) -> DatasetSpec:
    return replace(
        spec, secret_access_key=f"{SECRET_REF_PREFIX}{namespace}/{secret_name}"
    )


def spec_is_scrubbed(spec: DatasetSpec) -> bool:
    return spec.secret_access_key.startswith(SECRET_REF_PREFIX)


def parse_manifest(text: str) -> Dataset:
    """Parse a Dataset manifest, strictly.

    Unknown keys, duplicate keys, unknown dataset types and non-scalar
    values are all rejected with a path and a line/column position.  The
    returned Dataset starts in phase Pending.
    """
    root = compose_document(text)
    top = as_mapping(root)
    require_keys(top, ("apiVersion", "kind", "metadata", "spec"),
                 ("apiVersion", "kind", "metadata", "spec"), "", root)
    api_version = scalar_value(top["apiVersion"], "apiVersion")
    if api_version != API_VERSION:
        raise ManifestError(
            f"apiVersion: expected {API_VERSION!r}, got {api_version!r}", top["apiVersion"]
        )
    kind = scalar_value(top["kind"], "kind")
    if kind != "Dataset":
        raise ManifestError(f"kind: expected 'Dataset', got {kind!r}", top["kind"])
    meta = parse_metadata(top["metadata"])
    spec = _parse_spec(top["spec"])
    return Dataset(meta=meta, spec=spec, status=DatasetStatus())


def parse_metadata(node) -> ObjectMeta:
    items = as_mapping(node, "metadata")
    require_keys(items, ("name",), ("name", "namespace", "labels", "annotations"),
                 "metadata", node)
    labels = string_mapping(items["labels"], "metadata.labels") if "labels" in items else {}
    annotations = (
        string_mapping(items["annotations"], "metadata.annotations")
        if "annotations" in items
        else {}
    )
    return ObjectMeta(
        name=scalar_value(items["name"], "metadata.name"),
        namespace=scalar_value(items["namespace"], "metadata.namespace")
        if "namespace" in items
        else "default",
        labels=labels,
        annotations=annotations,
    )


def _parse_spec(node) -> DatasetSpec:
    items = as_mapping(node, "spec")
    require_keys(items, ("local",), ("local",), "spec", node)
    local = items["local"]
    local_items = as_mapping(local, "spec.local")
    if "type" not in local_items:
        raise ManifestError("spec.local: missing required key 'type'", local)
    dataset_type = scalar_value(local_items["type"], "spec.local.type")
    if dataset_type not in DATASET_TYPES:
        raise ManifestError(f"unknown datasetType {dataset_type!r}", local_items["type"])
    table = FIELD_TABLE[dataset_type]
    allowed = ("type",) + table["required"] + table["optional"]
    require_keys(local_items, ("type",), allowed, "spec.local", local)
    fields = {
        key: scalar_value(value, f"spec.local.{key}") for key, value in local_items.items()
    }
    return spec_from_local_fields(fields)


def serialize_manifest(dataset: Dataset) -> str:
    """Emit the user-level manifest (no status, no server-assigned metadata)."""
    metadata: dict[str, object] = {
        "name": dataset.meta.name,
        "namespace": dataset.meta.namespace,
    }
    if dataset.meta.labels:
        metadata["labels"] = dict(dataset.meta.labels)
    if dataset.meta.annotations:
        metadata["annotations"] = dict(dataset.meta.annotations)
    doc = {
        "apiVersion": API_VERSION,
        "kind": "Dataset",
        "metadata": metadata,
        "spec": {"local": spec_to_local_fields(dataset.spec)},
    }
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=False)
