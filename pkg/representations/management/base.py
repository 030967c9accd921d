from django.core.management.base import BaseCommand, CommandError

from representations.exceptions import TRepError


class TRepCommand(BaseCommand):
    """Runs ``run(**options)`` and exits with the error's code on a TRepError."""

    def handle(self, *args, **options):
        try:
            message = self.run(**options)
        except TRepError as exc:
            raise CommandError(str(exc), returncode=exc.exit_code) from exc
        if message:
            self.stdout.write(self.style.SUCCESS(message))

    def run(self, **options):
        raise NotImplementedError
