from hise.commands import ablate, data, evaluate, gradcheck, train
from hise.commands.base import REGISTRY, CommandContext, CommandSpec, command

# importing a command module runs its @command decorator, filling the REGISTRY
COMMAND_MODULES = (data, train, evaluate, ablate, gradcheck)

__all__ = ["COMMAND_MODULES", "REGISTRY", "CommandContext", "CommandSpec", "command"]
