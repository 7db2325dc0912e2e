import argparse
import sys

from .server import Bridge, BridgeConfig


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="taxolink-bridge",
        description="Serve embedding/token-classification models over JSON lines.",
    )
    parser.add_argument("--embed-model",
                        help="sentence-transformers model id, or hash:<dim> for tests")
    parser.add_argument("--label-model",
                        help="transformers token-classification model id, or 'demo' for tests")
    parser.add_argument("--max-tokens", type=int, default=256)
    parser.add_argument("--no-normalize", action="store_true",
                        help="skip L2 normalization of embeddings")
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--stdio", action="store_true", help="serve on stdin/stdout")
    group.add_argument("--listen", help="serve on TCP host:port")
    args = parser.parse_args(argv)

    try:
        config = BridgeConfig(
            embed_model=args.embed_model,
            label_model=args.label_model,
            max_tokens=args.max_tokens,
            normalize=not args.no_normalize,
            listen=args.listen,
        )
    except ValueError as exc:
        parser.error(str(exc))

    bridge = Bridge(config)
    if args.stdio:
        bridge.serve_stdio(sys.stdin, sys.stdout)
    else:
        def announce(addr):
            print(f"listening on {addr[0]}:{addr[1]}", file=sys.stderr)

        bridge.serve_tcp(ready=announce)
    return 0


if __name__ == "__main__":
    sys.exit(main())
