"""Run the model server: python -m babel_model_server --config server.json"""

import argparse

import uvicorn

from .app import create_app
from .config import load_config


def main() -> None:
    parser = argparse.ArgumentParser(description="Backend wire-protocol model server")
    parser.add_argument("--config", required=True, help="JSON server configuration")
    args = parser.parse_args()
    config = load_config(args.config)
    uvicorn.run(create_app(config), host=config.host, port=config.port)


if __name__ == "__main__":
    main()
