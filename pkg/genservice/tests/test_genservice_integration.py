"""End-to-end wire check: serve a trained checkpoint over HTTP and drive it
with the upstream CLI's service reconstructor, both in separate processes."""

import json
import socket
import subprocess
import sys
import time
import urllib.request


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def wait_for_health(url: str, server: subprocess.Popen, tries: int = 100) -> dict:
    for _ in range(tries):
        if server.poll() is not None:
            raise AssertionError(f"server exited early:\n{server.stderr.read()}")
        try:
            with urllib.request.urlopen(url + "/health", timeout=1) as response:
                return json.loads(response.read())
        except OSError:
            time.sleep(0.2)
    raise AssertionError("server never became healthy")


def test_primary_generates_through_served_checkpoint(trained, primary_cli, tmp_path):
    port = free_port()
    url = f"http://127.0.0.1:{port}"
    server = subprocess.Popen(
        [
            sys.executable,
            "-m",
            "genservice.cli",
            "serve",
            "--checkpoint",
            str(trained.result.best),
            "--port",
            str(port),
        ],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
    )
    try:
        health = wait_for_health(url, server)
        assert health["status"] == "ok"
        version = health["model_version"]

        out = tmp_path / "dataset.jsonl"
        manifest = tmp_path / "dataset.manifest.json"
        proc = subprocess.run(
            [
                *[str(p) for p in primary_cli],
                "generate",
                "--mode",
                "docogen",
                "--reconstructor",
                "service",
                "--service-url",
                url,
                "--snapshot",
                str(trained.workspace.snapshot),
                "--orientations",
                str(trained.workspace.orientations),
                "--domain",
                f"gadgets={trained.eval_files['gadgets']}",
                "--destinations",
                "flights",
                "--k",
                "3",
                "--out",
                str(out),
                "--manifest",
                str(manifest),
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr

        rows = [json.loads(line) for line in open(out, encoding="utf-8") if line.strip()]
        originals = [r for r in rows if r.get("source") == "original"]
        generated = [r for r in rows if r.get("source") != "original"]
        assert len(originals) == 6
        assert len(generated) == 18  # 6 docs x 3 orientation descriptors
        for row in generated:
            assert row["domain"] == "flights"
            assert row["origin_domain"] == "gadgets"
            assert row["text"]

        body = json.loads(manifest.read_text(encoding="utf-8"))
        assert body["model_versions"] == [version]
    finally:
        server.terminate()
        server.wait(timeout=15)
