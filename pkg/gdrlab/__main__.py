from gdrlab.cli import cli

cli(prog_name="gdrlab")
