"""Main command-line application for bihm."""
import argparse
import importlib
import logging
import sys
from typing import Optional, Protocol, Sequence

from bihm import commands
from bihm.config.constants import VERSION, make_handler
from bihm.config.settings import Config
from bihm.errors import BihmError


class Command(Protocol):
    """What a command module registers with the app."""
    name: str

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        ...

    def run(self, args: argparse.Namespace) -> int:
        ...


class BihmApp:
    """Command-line application: parser, logging and command dispatch."""

    def __init__(self, config: Optional[Config] = None, debug: bool = False) -> None:
        self.config = config or Config()
        self.debug = debug or self.config.mode == "debug"
        self.parser = argparse.ArgumentParser(prog="bihm", description="Bidirectional Helmholtz machines.")
        self.parser.add_argument("--version", action="version", version=f"bihm {VERSION}")
        self.parser.add_argument("--config", help="JSON settings file (default bihm.json)")
        self.parser.add_argument("--debug", action="store_true", help="Log at DEBUG level")
        self.subparsers = self.parser.add_subparsers(dest="command", required=True)
        self.commands: dict[str, Command] = {}
        self.l_handler: Optional[logging.Handler] = None
        self.s_handler: Optional[logging.Handler] = None
        if not logging.getLogger().handlers:
            logging.getLogger().addHandler(logging.NullHandler())

    def add_command(self, command: Command, help_text: str) -> None:
        """Registers a command and its subparser."""
        parser = self.subparsers.add_parser(command.name, help=help_text, description=help_text)
        command.add_arguments(parser)
        self.commands[command.name] = command

    def setup_hook(self) -> None:
        """Loads every command module."""
        logging.debug("Loading commands...")
        for extension in commands.EXTENSIONS:
            module = importlib.import_module(extension)
            module.setup(self)
            logging.debug("Loaded command module: %s", extension)

    def setup_logging(self) -> None:
        """Attaches the rotating file handler, plus a stderr handler in debug mode, to the root logger."""
        root = logging.getLogger()
        root.setLevel(logging.DEBUG if self.debug else logging.INFO)
        formatter = logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s")
        try:
            self.l_handler = make_handler(self.config.log_dir)
        except OSError as err:
            logging.warning("File logging disabled: %s", err)
        else:
            self.l_handler.setFormatter(formatter)
            root.addHandler(self.l_handler)
        if self.debug:
            self.s_handler = logging.StreamHandler(sys.stderr)
            self.s_handler.setFormatter(formatter)
            root.addHandler(self.s_handler)

    def on_command_error(self, error: BaseException) -> int:
        """Prints one machine-parseable line for an error and returns the exit code."""
        if isinstance(error, BihmError):
            print(f"error: {error.kind}: {error}", file=sys.stderr)
            logging.error("%s: %s", error.kind, error)
            return 2
        if isinstance(error, OSError):
            print(f"error: io: {error}", file=sys.stderr)
            logging.error("io: %s", error)
            return 3
        logging.exception("Ignoring exception %s:", str(error), exc_info=error)
        print(f"error: internal: {type(error).__name__}: {error}", file=sys.stderr)
        return 1

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        """Parses ``argv``, runs the chosen command and returns the exit code."""
        self.setup_hook()
        args = self.parser.parse_args(argv)
        if args.config:
            self.config = Config(args.config)
        self.debug = self.debug or args.debug or self.config.mode == "debug"
        self.setup_logging()
        logging.info("bihm %s: %s", VERSION, args.command)
        try:
            return self.commands[args.command].run(args) or 0
        except Exception as error:  # pylint: disable=broad-except
            return self.on_command_error(error)
        finally:
            for handler in (self.l_handler, self.s_handler):
                if handler is not None:
                    logging.getLogger().removeHandler(handler)
                    handler.close()
